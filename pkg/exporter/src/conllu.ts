import { ParsedSentence, ParseTokenRow } from "./formats";

/**
 * Read the CoNLL-U text a parser emits into sentence structures.
 *
 * Tolerant of the full 10-column format: multi-word range lines and empty
 * nodes are dropped (the downstream subset only consumes plain token ids),
 * comments other than sentence ids are ignored.
 */
export function parseConllu(text: string, ids: string[]): ParsedSentence[] {
  const sentences: ParsedSentence[] = [];
  let tokens: ParseTokenRow[] = [];
  let index = 0;

  const flush = () => {
    if (tokens.length === 0) return;
    const id = index < ids.length ? ids[index] : `s${index + 1}`;
    sentences.push({ id, tokens });
    tokens = [];
    index += 1;
  };

  for (const raw of text.split("\n")) {
    const line = raw.trimEnd();
    if (line === "") {
      flush();
      continue;
    }
    if (line.startsWith("#")) continue;
    const cols = line.split("\t");
    if (cols.length < 8) {
      throw new Error(`malformed parser output line: ${line}`);
    }
    if (cols[0].includes("-") || cols[0].includes(".")) continue;
    tokens.push({
      index: Number(cols[0]),
      surface: cols[1],
      lemma: cols[2],
      upos: cols[3],
      head: Number(cols[6]),
      deprel: cols[7],
    });
  }
  flush();
  return sentences;
}
