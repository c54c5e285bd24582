#!/usr/bin/env node
// Pinned stand-in for the region-feature detector: deterministic pseudo
// objects derived from the image id, so regenerated fixtures are stable.

const VERSION = "mock-detector 2.1.0";
const TAGS = ["poster", "bowl", "drum", "cart", "lamp", "basket"];
const FEATURE_DIM = 8;

if (process.argv.includes("--version")) {
  process.stdout.write(VERSION + "\n");
  process.exit(0);
}

function hash(str) {
  let h = 2166136261 >>> 0;
  for (const ch of str) {
    h ^= ch.charCodeAt(0);
    h = Math.imul(h, 16777619) >>> 0;
  }
  return h >>> 0;
}

function mulberry32(seed) {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

let input = "";
process.stdin.setEncoding("utf-8");
process.stdin.on("data", (chunk) => (input += chunk));
process.stdin.on("end", () => {
  const out = [];
  for (const line of input.split("\n")) {
    if (!line.trim()) continue;
    const image = JSON.parse(line);
    const rand = mulberry32(hash(image.image_id));
    const nObjects = 3 + Math.floor(rand() * 3);
    const objects = [];
    for (let i = 0; i < nObjects; i++) {
      const w = 10 + Math.floor(rand() * (image.width / 2));
      const h = 10 + Math.floor(rand() * (image.height / 2));
      const x = Math.floor(rand() * (image.width - w));
      const y = Math.floor(rand() * (image.height - h));
      const feature = [];
      for (let d = 0; d < FEATURE_DIM; d++) feature.push(Number((rand() * 2 - 1).toFixed(6)));
      objects.push({
        tag: TAGS[Math.floor(rand() * TAGS.length)],
        bbox: [x, y, w, h],
        score: Number((0.5 + rand() * 0.5).toFixed(4)),
        feature,
      });
    }
    out.push(JSON.stringify({ image_id: image.image_id, objects }));
  }
  process.stdout.write(out.join("\n") + (out.length ? "\n" : ""));
});
