import { createHash } from "node:crypto";
import { readFileSync, writeFileSync } from "node:fs";

export const SCHEMA_VERSION = 1;

export interface OutputEntry {
  path: string;
  kind: string;
  sha256: string;
  records: number;
}

export interface ToolEntry {
  command: string;
  version: string;
}

export interface ExportManifest {
  schema_version: number;
  generated_by: string;
  tools: Record<string, ToolEntry>;
  outputs: OutputEntry[];
  notes?: Record<string, unknown>;
}

export function sha256File(path: string): string {
  return createHash("sha256").update(readFileSync(path)).digest("hex");
}

export function writeManifest(
  path: string,
  tools: Record<string, ToolEntry>,
  outputs: OutputEntry[],
  notes?: Record<string, unknown>,
): ExportManifest {
  const manifest: ExportManifest = {
    schema_version: SCHEMA_VERSION,
    generated_by: "knowvl-fixture-exporter 0.1.0",
    tools,
    outputs,
    ...(notes ? { notes } : {}),
  };
  writeFileSync(path, JSON.stringify(manifest, null, 2) + "\n");
  return manifest;
}
