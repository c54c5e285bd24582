#!/usr/bin/env node
/**
 * Slice a pinned pretrained word-vector dump down to a vocabulary subset and
 * serialize it as a pipeline-ready embedding table.
 *
 * The dump is the external artifact here; its content hash and dimension are
 * recorded as the pinned version. Words missing from the dump are skipped
 * and reported in the manifest notes.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { fail, readArgs } from "./args";
import { serializeEmbeddings } from "./formats";
import { sha256File, writeManifest } from "./manifest";
import { validateWithPrimary } from "./validate";

function main(): void {
  const args = readArgs({
    vocab: { required: true },
    source: { required: true },
    out: { required: true },
    manifest: {},
  });

  const wanted = new Set(
    readFileSync(args.vocab, "utf-8")
      .split("\n")
      .map((w) => w.trim().toLowerCase())
      .filter((w) => w.length > 0),
  );

  const sourceLines = readFileSync(args.source, "utf-8").split("\n");
  const entries = new Map<string, number[]>();
  let dim: number | null = null;
  sourceLines.forEach((line, i) => {
    const parts = line.trim().split(/\s+/).filter((p) => p.length > 0);
    if (parts.length === 0) return;
    if (i === 0 && parts.length === 2 && !Number.isNaN(Number(parts[0]))) {
      dim = Number(parts[1]);
      return;
    }
    const [word, ...floats] = parts;
    if (dim === null) dim = floats.length;
    if (!wanted.has(word.toLowerCase()) || entries.has(word)) return;
    if (floats.length !== dim) {
      throw new Error(`ragged vector for ${word} at source line ${i + 1}`);
    }
    entries.set(word, floats.map(Number));
  });
  if (entries.size === 0 || dim === null) {
    throw new Error("no requested words found in the source dump");
  }

  writeFileSync(args.out, serializeEmbeddings(entries, dim));
  const { records } = validateWithPrimary("embeddings", args.out);

  const missing = [...wanted].filter(
    (w) => ![...entries.keys()].some((k) => k.toLowerCase() === w),
  );
  if (args.manifest) {
    writeManifest(
      args.manifest,
      {
        vectors: {
          command: `dump:${args.source}`,
          version: `sha256:${sha256File(args.source).slice(0, 16)} dim:${dim}`,
        },
      },
      [{ path: args.out, kind: "embeddings", sha256: sha256File(args.out), records }],
      { requested: wanted.size, found: entries.size, missing },
    );
  }
  process.stdout.write(JSON.stringify({
    ok: true, words: records, missing: missing.length, out: args.out,
  }) + "\n");
}

try {
  main();
} catch (error) {
  fail(error);
}
