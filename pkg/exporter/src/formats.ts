/**
 * Serializers for the pipeline's on-disk formats.
 *
 * These mirror the reader contracts exactly: 10-column tab-separated parse
 * files with sentence_id comments, line-delimited JSON detections with a
 * format_version header record, and word2vec-style embedding dumps with a
 * `count dim` header line.
 */

export interface ParseTokenRow {
  index: number;
  surface: string;
  upos: string;
  head: number;
  deprel: string;
  lemma?: string;
}

export interface ParsedSentence {
  id: string;
  tokens: ParseTokenRow[];
}

export function serializeParseFile(sentences: ParsedSentence[]): string {
  const chunks: string[] = [];
  for (const sentence of sentences) {
    chunks.push(`# sentence_id = ${sentence.id}\n`);
    for (const tok of sentence.tokens) {
      const lemma = tok.lemma ?? tok.surface.toLowerCase();
      const cols = [
        String(tok.index),
        tok.surface,
        lemma,
        tok.upos,
        "_",
        "_",
        String(tok.head),
        tok.deprel,
        "_",
        "_",
      ];
      chunks.push(cols.join("\t") + "\n");
    }
    chunks.push("\n");
  }
  return chunks.join("");
}

export interface RawObject {
  tag: string;
  bbox: [number, number, number, number];
  score: number;
  feature: number[];
}

export interface RawImage {
  image_id: string;
  width: number;
  height: number;
  objects: RawObject[];
}

export function serializeDetections(images: RawImage[], featureDim: number): string {
  const lines: string[] = [];
  lines.push(JSON.stringify({
    feature_dim: featureDim,
    format_version: 1,
    record_kind: "detections",
  }));
  for (const image of images) {
    lines.push(JSON.stringify({
      image_id: image.image_id,
      objects: image.objects.map((o) => ({
        area: o.bbox[2] * o.bbox[3],
        bbox: o.bbox,
        feature: o.feature,
        score: o.score,
        tag: o.tag,
      })),
      width: image.width,
      height: image.height,
    }));
  }
  return lines.join("\n") + "\n";
}

export function serializeEmbeddings(entries: Map<string, number[]>, dim: number): string {
  const lines: string[] = [`${entries.size} ${dim}`];
  for (const [word, vector] of entries) {
    if (vector.length !== dim) {
      throw new Error(`vector for ${word} has length ${vector.length}, expected ${dim}`);
    }
    lines.push(`${word} ${vector.map((v) => String(v)).join(" ")}`);
  }
  return lines.join("\n") + "\n";
}
