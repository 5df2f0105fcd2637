import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, afterEach, describe, expect, it, vi } from "vitest";

import { main } from "../src/cli.js";

const FIXTURES = fileURLToPath(new URL("./fixtures/", import.meta.url));
const tmp = mkdtempSync(join(tmpdir(), "plots-"));

afterAll(() => rmSync(tmp, { recursive: true, force: true }));
afterEach(() => vi.restoreAllMocks());

function quiet() {
  return {
    log: vi.spyOn(console, "log").mockImplementation(() => {}),
    error: vi.spyOn(console, "error").mockImplementation(() => {}),
  };
}

describe("plot CLI", () => {
  it("renders a figure from a glob and reports what it wrote", () => {
    const { log } = quiet();
    const out = join(tmp, "acc.svg");
    const code = main(["--kind", "acc-vs-time", "--in", join(FIXTURES, "*.rounds.csv"), "--out", out]);
    expect(code).toBe(0);
    expect(readFileSync(out, "utf8").startsWith("<svg")).toBe(true);
    expect(log.mock.calls[0]?.[0]).toContain("6 inputs");
  });

  it("re-renders byte-identically", () => {
    quiet();
    const out = join(tmp, "stable.svg");
    const args = ["--kind", "acc-vs-round", "--in", join(FIXTURES, "lesson_*.rounds.csv"), "--out", out];
    expect(main(args)).toBe(0);
    const first = readFileSync(out, "utf8");
    expect(main(args)).toBe(0);
    expect(readFileSync(out, "utf8")).toBe(first);
  });

  it("accepts the exported kind names as well as the kebab aliases", () => {
    quiet();
    const out = join(tmp, "hist.svg");
    const code = main(["--kind", "LatencyHist", "--in", join(FIXTURES, "*.clients.csv"), "--out", out]);
    expect(code).toBe(0);
    expect(readFileSync(out, "utf8")).toContain('class="bin"');
  });

  it("creates the output directory when needed", () => {
    quiet();
    const out = join(tmp, "nested", "dir", "dist.svg");
    const code = main([
      "--kind", "class-dist",
      "--in", join(FIXTURES, "fedcs_tau10_beta1_seed0.classes.csv"),
      "--out", out,
    ]);
    expect(code).toBe(0);
    expect(readFileSync(out, "utf8")).toContain('class="segment"');
  });

  it("prints usage on --help", () => {
    const { log } = quiet();
    expect(main(["--help"])).toBe(0);
    expect(log.mock.calls[0]?.[0]).toContain("usage: plot");
  });

  it("exits 2 when required flags are missing", () => {
    const { error } = quiet();
    expect(main([])).toBe(2);
    expect(error.mock.calls[0]?.[0]).toContain("required");
  });

  it("exits 2 on an unknown kind", () => {
    quiet();
    expect(main(["--kind", "pie", "--in", join(FIXTURES, "*.rounds.csv"), "--out", join(tmp, "x.svg")])).toBe(2);
  });

  it("exits 2 on an unknown flag", () => {
    quiet();
    expect(main(["--kind", "acc-vs-time", "--whoops", "--in", "a", "--out", "b"])).toBe(2);
  });

  it("exits 2 when no files match the glob", () => {
    const { error } = quiet();
    expect(
      main(["--kind", "acc-vs-time", "--in", join(FIXTURES, "missing_*.csv"), "--out", join(tmp, "x.svg")]),
    ).toBe(2);
    expect(error.mock.calls[0]?.[0]).toContain("no files match");
  });

  it("exits 2 on a non-integer window", () => {
    quiet();
    expect(
      main([
        "--kind", "acc-vs-time",
        "--in", join(FIXTURES, "*.rounds.csv"),
        "--out", join(tmp, "x.svg"),
        "--window", "2.5",
      ]),
    ).toBe(2);
  });

  it("exits 2 when the figure rejects its inputs", () => {
    const { error } = quiet();
    expect(
      main(["--kind", "class-dist", "--in", join(FIXTURES, "*.classes.csv"), "--out", join(tmp, "x.svg")]),
    ).toBe(2);
    expect(error.mock.calls[0]?.[0]).toContain("exactly one input");
  });
});
