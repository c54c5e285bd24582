import { spawnSync } from "node:child_process";

import { SchemaValidationFailed, ToolMissing } from "./errors";

/**
 * Run an exported file through the training pipeline's own schema validator
 * (the `knowvl validate` subcommand). Export succeeds only when the
 * validator accepts the file with zero warnings.
 */
export function validateWithPrimary(kind: string, path: string): { records: number } {
  const bin = process.env.KNOWVL_BIN ?? "knowvl";
  const result = spawnSync(bin, ["validate", "--kind", kind, path], {
    encoding: "utf-8",
  });
  if (result.error) {
    throw new ToolMissing(`${bin} (set KNOWVL_BIN to the pipeline CLI)`, result.error);
  }
  if (result.status !== 0) {
    throw new SchemaValidationFailed(
      `${kind} file ${path} rejected: ${result.stderr.trim() || result.stdout.trim()}`,
    );
  }
  const payload = JSON.parse(result.stdout.trim().split("\n").pop() ?? "{}");
  if (!payload.ok) {
    throw new SchemaValidationFailed(`${kind} file ${path}: validator reported not ok`);
  }
  if (Array.isArray(payload.warnings) && payload.warnings.length > 0) {
    throw new SchemaValidationFailed(
      `${kind} file ${path}: validator warnings: ${payload.warnings.join("; ")}`,
    );
  }
  return { records: payload.records ?? 0 };
}
