import { parseArgs } from "node:util";

export interface CommonArgs {
  values: Record<string, string | boolean | undefined>;
}

export function readArgs(spec: Record<string, { required?: boolean }>): Record<string, string> {
  const options: Record<string, { type: "string" }> = {};
  for (const name of Object.keys(spec)) options[name] = { type: "string" };
  const { values } = parseArgs({ options, allowPositionals: false });
  const out: Record<string, string> = {};
  for (const [name, cfg] of Object.entries(spec)) {
    const value = values[name];
    if (value === undefined) {
      if (cfg.required) {
        process.stderr.write(JSON.stringify({ error: "MissingFlag", flag: `--${name}` }) + "\n");
        process.exit(1);
      }
      continue;
    }
    out[name] = String(value);
  }
  return out;
}

export function fail(error: unknown): never {
  const err = error as Error;
  process.stderr.write(JSON.stringify({
    error: err.name ?? "Error",
    message: err.message ?? String(error),
  }) + "\n");
  process.exit(err.name === "ToolMissing" || err.name === "SchemaValidationFailed" ? 1 : 2);
}

export function splitCommand(command: string): string[] {
  return command.split(/\s+/).filter((c) => c.length > 0);
}
