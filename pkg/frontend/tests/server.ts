// Boots the real Python session server for integration tests.

import { type ChildProcess, spawn } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export type RunningServer = {
  base: string;
  dataDir: string;
  stop: () => Promise<void>;
};

const BOOT = `
import sys
import uvicorn
from alloclab.server import create_app

uvicorn.run(create_app(sys.argv[1]), host="127.0.0.1", port=int(sys.argv[2]), log_level="warning")
`;

async function waitReady(base: string, child: ChildProcess): Promise<void> {
  const deadline = Date.now() + 20000;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    if (child.exitCode !== null) {
      throw new Error(`server exited early with code ${child.exitCode}`);
    }
    try {
      const res = await fetch(`${base}/sessions`);
      if (res.ok) return;
    } catch (err) {
      lastError = err;
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  throw new Error(`server never became ready: ${lastError}`);
}

export async function startServer(dataDir?: string): Promise<RunningServer> {
  const dir = dataDir ?? mkdtempSync(join(tmpdir(), "alloc-console-"));
  const port = 8200 + Math.floor(Math.random() * 1000);
  const child = spawn("python3", ["-c", BOOT, dir, String(port)], {
    stdio: ["ignore", "ignore", "pipe"],
  });
  let stderr = "";
  child.stderr?.on("data", (chunk) => {
    stderr += String(chunk);
  });
  const base = `http://127.0.0.1:${port}`;
  try {
    await waitReady(base, child);
  } catch (err) {
    child.kill("SIGKILL");
    throw new Error(`${err}\n${stderr}`);
  }
  return {
    base,
    dataDir: dir,
    stop: () =>
      new Promise<void>((resolve) => {
        child.once("exit", () => resolve());
        child.kill("SIGTERM");
        setTimeout(() => child.kill("SIGKILL"), 5000).unref();
      }),
  };
}
