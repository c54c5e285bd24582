#!/usr/bin/env node
/**
 * Drive an external region-feature detector and serialize its output as a
 * pipeline-ready detections file.
 *
 * Input: line-delimited JSON image entries `{image_id, width, height, ...}`.
 * The detector command receives those lines on stdin and must emit one JSON
 * line per image: `{image_id, objects: [{tag, bbox, score, feature}]}`.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { fail, readArgs, splitCommand } from "./args";
import { RawImage, serializeDetections } from "./formats";
import { sha256File, writeManifest } from "./manifest";
import { driveTool, openTool } from "./tools";
import { validateWithPrimary } from "./validate";

function main(): void {
  const args = readArgs({
    images: { required: true },
    tool: { required: true },
    out: { required: true },
    manifest: {},
  });

  const entries = readFileSync(args.images, "utf-8")
    .split("\n")
    .filter((l) => l.trim().length > 0)
    .map((l) => JSON.parse(l) as { image_id: string; width: number; height: number });

  const tool = openTool(splitCommand(args.tool));
  const raw = entries.length
    ? driveTool(tool, entries.map((e) => JSON.stringify(e)).join("\n") + "\n")
    : "";
  const byId = new Map(entries.map((e) => [e.image_id, e]));
  const images: RawImage[] = [];
  let featureDim: number | null = null;
  for (const line of raw.split("\n")) {
    if (!line.trim()) continue;
    const rec = JSON.parse(line) as { image_id: string; objects: RawImage["objects"] };
    const entry = byId.get(rec.image_id);
    if (!entry) throw new Error(`detector returned unknown image ${rec.image_id}`);
    for (const obj of rec.objects) {
      if (featureDim === null) featureDim = obj.feature.length;
      if (obj.feature.length !== featureDim) {
        throw new Error(
          `feature length ${obj.feature.length} != ${featureDim} in ${rec.image_id}`,
        );
      }
    }
    images.push({ ...entry, objects: rec.objects });
  }
  if (images.length !== entries.length) {
    throw new Error(`detector returned ${images.length} images for ${entries.length} inputs`);
  }

  writeFileSync(args.out, serializeDetections(images, featureDim ?? 0));
  const { records } = validateWithPrimary("detections", args.out);

  if (args.manifest) {
    writeManifest(
      args.manifest,
      { detector: { command: args.tool, version: tool.version } },
      [{ path: args.out, kind: "detections", sha256: sha256File(args.out), records }],
      { feature_dim: featureDim ?? 0 },
    );
  }
  process.stdout.write(JSON.stringify({ ok: true, images: records, out: args.out }) + "\n");
}

try {
  main();
} catch (error) {
  fail(error);
}
