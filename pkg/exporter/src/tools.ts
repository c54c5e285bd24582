import { spawnSync } from "node:child_process";

import { ToolMissing } from "./errors";

export interface ToolHandle {
  command: string[];
  version: string;
}

function run(command: string[], input?: string): { stdout: string; status: number } {
  const [bin, ...args] = command;
  const result = spawnSync(bin, args, {
    input: input ?? "",
    encoding: "utf-8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (result.error) {
    throw new ToolMissing(command.join(" "), result.error);
  }
  if (result.status !== 0) {
    throw new Error(
      `tool ${command.join(" ")} exited with ${result.status}: ${result.stderr}`,
    );
  }
  return { stdout: result.stdout, status: result.status ?? 0 };
}

/** Probe the tool once for its pinned version string. */
export function openTool(command: string[]): ToolHandle {
  const probe = run([...command, "--version"]);
  return { command, version: probe.stdout.trim() };
}

export function driveTool(tool: ToolHandle, input: string): string {
  return run(tool.command, input).stdout;
}
