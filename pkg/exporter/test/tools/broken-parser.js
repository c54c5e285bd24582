#!/usr/bin/env node
// Emits structurally broken output (dangling head) so tests can exercise the
// schema-validation failure path.

if (process.argv.includes("--version")) {
  process.stdout.write("broken-parser 0.0.1\n");
  process.exit(0);
}
process.stdin.resume();
process.stdin.on("end", () => {
  process.stdout.write("1\tword\tword\tNOUN\t_\t_\t9\tdep\t_\t_\n\n");
});
process.stdin.on("data", () => {});
