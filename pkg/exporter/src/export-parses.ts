#!/usr/bin/env node
/**
 * Drive an external dependency parser over caption / definition sentences
 * and serialize its output as a pipeline-ready parse file.
 *
 * Input: one sentence per line, optionally prefixed `id<TAB>`. The parser
 * command receives the bare sentences on stdin and must emit CoNLL-U on
 * stdout, one block per input sentence in order.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { fail, readArgs, splitCommand } from "./args";
import { parseConllu } from "./conllu";
import { serializeParseFile } from "./formats";
import { sha256File, writeManifest } from "./manifest";
import { driveTool, openTool } from "./tools";
import { validateWithPrimary } from "./validate";

function main(): void {
  const args = readArgs({
    input: { required: true },
    tool: { required: true },
    out: { required: true },
    manifest: {},
  });

  const lines = readFileSync(args.input, "utf-8")
    .split("\n")
    .map((l) => l.trimEnd())
    .filter((l) => l.length > 0);
  const ids: string[] = [];
  const sentences: string[] = [];
  lines.forEach((line, i) => {
    const tab = line.indexOf("\t");
    if (tab > 0) {
      ids.push(line.slice(0, tab));
      sentences.push(line.slice(tab + 1));
    } else {
      ids.push(`s${i + 1}`);
      sentences.push(line);
    }
  });

  const tool = openTool(splitCommand(args.tool));
  const raw = sentences.length ? driveTool(tool, sentences.join("\n") + "\n") : "";
  const parsed = parseConllu(raw, ids);
  if (parsed.length !== sentences.length) {
    throw new Error(
      `parser returned ${parsed.length} sentences for ${sentences.length} inputs`,
    );
  }
  writeFileSync(args.out, serializeParseFile(parsed));
  const { records } = validateWithPrimary("parse", args.out);

  if (args.manifest) {
    writeManifest(
      args.manifest,
      { parser: { command: args.tool, version: tool.version } },
      [{ path: args.out, kind: "parse", sha256: sha256File(args.out), records }],
    );
  }
  process.stdout.write(JSON.stringify({ ok: true, sentences: records, out: args.out }) + "\n");
}

try {
  main();
} catch (error) {
  fail(error);
}
