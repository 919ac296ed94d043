/**
 * Subprocess boundary to the motionfield core.
 *
 * All numerical work happens in the core; this module only locates the
 * interpreter and maps exit codes onto typed errors.  Exit codes follow
 * the CLI contract: 0 success, 1 usage, 2 data/validation, 3 solver did
 * not converge.
 */
import { spawnSync } from "node:child_process";

export class CoreError extends Error {
  constructor(message: string, readonly exitCode: number) {
    super(message);
  }
}

export interface CliResult {
  stdout: string;
  exitCode: number;
}

/** Override with MOTIONFIELD_PYTHON when the core lives in a venv. */
export function pythonExecutable(): string {
  return process.env.MOTIONFIELD_PYTHON ?? "python3";
}

/**
 * Run one motionfield subcommand.  `allowNonConverged` lets exit code 3
 * through (the output file is still written; callers get the report).
 */
export function runCore(args: string[], allowNonConverged = false): CliResult {
  const proc = spawnSync(pythonExecutable(), ["-m", "motionfield", ...args], {
    encoding: "utf8",
    maxBuffer: 64 * 1024 * 1024,
  });
  if (proc.error) {
    throw new CoreError(`failed to launch core: ${proc.error.message}`, -1);
  }
  const code = proc.status ?? -1;
  if (code === 0 || (code === 3 && allowNonConverged)) {
    return { stdout: proc.stdout, exitCode: code };
  }
  throw new CoreError(
    `core exited ${code}: ${proc.stderr.trim() || proc.stdout.trim()}`,
    code,
  );
}
