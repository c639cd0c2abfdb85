// Scripted end-to-end session against the real backend: generate data,
// train a model, serve, annotate a 15-point series through the blinded
// session, and check the displayed agreement equals the backend evaluation
// of the persisted annotation log.

import assert from "node:assert/strict";
import { after, before, test } from "node:test";
import { execFileSync, spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { DashboardApi } from "../src/api.js";
import { AnnotationSession } from "../src/state.js";
import type { WslLabel } from "../src/types.js";
import { LABELS } from "../src/wsl.js";

const PYTHON = process.env.PYTHON ?? "python3";

let workDir: string;
let server: ChildProcess | null = null;
let base = "";

function cli(...args: string[]): string {
  return execFileSync(PYTHON, ["-m", "visus.cli", ...args], { encoding: "utf-8" });
}

before(async () => {
  workDir = mkdtempSync(join(tmpdir(), "dashboard-e2e-"));
  const data = join(workDir, "data");
  // every eye gets a 19-examination series -> exactly 15 forecast points
  writeFileSync(
    join(workDir, "synth.conf"),
    "min_exams = 19\nmax_exams = 19\noct_rate = 0.4\nva_noise = 0.05\n",
  );
  cli("synth", "--seed", "23", "--patients", "4", "--config", join(workDir, "synth.conf"),
      "--out", data);
  const corpus = join(workDir, "corpus.json");
  cli("ingest", "--ehr", join(data, "ehr"), "--ivom", join(data, "ivom.csv"),
      "--oct", join(data, "oct", "manifest.csv"), "--salt", "ui-e2e", "--out", corpus);
  cli("ontology", "map", "--in", corpus, "--out", corpus);
  cli("features", "build", "--corpus", corpus, "--out", join(workDir, "windows.jsonl"));
  execFileSync("mkdir", ["-p", join(workDir, "models")]);
  cli("train", "--model", "statistical", "--windows", join(workDir, "windows.jsonl"),
      "--seed", "3", "--out", join(workDir, "models", "statistical.json"));

  server = spawn(PYTHON, [
    "-u", "-m", "visus.cli", "serve", "--corpus", corpus,
    "--models-dir", join(workDir, "models"),
    "--annotations-log", join(workDir, "annotations.jsonl"),
    "--port", "0",
  ]);
  base = await new Promise<string>((resolve, reject) => {
    let buffer = "";
    const timer = setTimeout(() => reject(new Error(`service did not start: ${buffer}`)), 30000);
    server!.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = /serving on (http:\/\/[^/\s]+)/.exec(buffer);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]);
      }
    });
    server!.on("exit", (code) => reject(new Error(`service exited early (${code})`)));
  });
});

after(() => {
  if (server) server.kill();
});

test("scripted 15-point annotation session with blinding and score parity", async () => {
  const requested: string[] = [];
  const recordingFetch = (url: string, init?: RequestInit) => {
    requested.push(url);
    return fetch(url, init);
  };
  const api = new DashboardApi(base, recordingFetch);

  const page = await api.listPatients(0, 50);
  assert.ok(page.models.includes("statistical"));
  const candidate = page.patients.find((p) =>
    Object.values(p.eyes).some((e) => e.examinations === 19),
  );
  assert.ok(candidate, "expected a patient with a 19-examination eye");
  const eye = Object.entries(candidate.eyes).find(([, e]) => e.examinations === 19)![0];

  const session = new AnnotationSession(api, candidate.pseudo_id, eye, "scripted-expert");
  await session.start();
  assert.equal(session.totalExaminations, 19);

  // deterministic mixed forecast policy
  while (!session.done) {
    const label: WslLabel = LABELS[session.cursor % 3];
    const scored = await session.submit(label);
    assert.ok(scored, "submission must succeed against the live service");
    assert.equal(scored.index + 1, session.cursor);
  }
  assert.equal(session.scored.length, 15);
  assert.equal(session.agreement.total, 15);

  // blinding: every timeline request was limited, and never beyond the
  // examination whose forecast had already been submitted
  const uptos = requested
    .filter((u) => u.includes("/timeline"))
    .map((u) => {
      const match = /upto=(\d+)/.exec(u);
      assert.ok(match, `unlimited timeline request during annotation: ${u}`);
      return Number(match![1]);
    });
  assert.equal(Math.max(...uptos), 18);
  assert.deepEqual(uptos[0], 3);

  // all fifteen annotations persisted, in order
  const stored = await api.annotations(candidate.pseudo_id, eye);
  assert.equal(stored.annotations.length, 15);
  assert.deepEqual(
    stored.annotations.map((a) => a.index),
    Array.from({ length: 15 }, (_v, k) => k + 4),
  );

  // parity: replay the persisted log through the backend evaluation and
  // compare with the session's displayed agreement counts
  const parity = JSON.parse(
    execFileSync(
      PYTHON,
      [
        "-c",
        `
import json, sys
from visus.cohort import WslLabel
from visus.evaluation import compare, CLASS_ORDER
from visus.features import load_windows
from visus.predict import truth_label

windows_path, log_path, patient, eye = sys.argv[1:5]
truth = {w.key(): truth_label(w) for w in load_windows(windows_path)}
expert = {}
with open(log_path) as fh:
    for line in fh:
        d = json.loads(line)
        if d["patient"] == patient and d["eye"] == eye:
            expert[(d["patient"], d["eye"], d["index"])] = WslLabel(d["label"])
result = compare(expert, expert, truth)
report = result.expert_report
print(json.dumps({
    "order": [c.value for c in CLASS_ORDER],
    "matrix": report.matrix.counts,
    "correct": report.true_positives,
    "total": report.total,
}))
`,
        join(workDir, "windows.jsonl"),
        join(workDir, "annotations.jsonl"),
        candidate.pseudo_id,
        eye,
      ],
      { encoding: "utf-8" },
    ),
  ) as { order: WslLabel[]; matrix: number[][]; correct: number; total: number };

  assert.equal(parity.total, 15);
  assert.equal(parity.correct, session.agreement.correct);
  for (let i = 0; i < 3; i += 1) {
    for (let j = 0; j < 3; j += 1) {
      const truthLabel = parity.order[i];
      const forecastLabel = parity.order[j];
      const ours =
        session.agreement.matrix[LABELS.indexOf(truthLabel)][LABELS.indexOf(forecastLabel)];
      assert.equal(
        ours,
        parity.matrix[i][j],
        `confusion cell (${truthLabel}, ${forecastLabel}) must match the backend`,
      );
    }
  }
});

test("comparison view fetches one model forecast per examination", async () => {
  const api = new DashboardApi(base);
  const page = await api.listPatients(0, 50);
  const candidate = page.patients.find((p) =>
    Object.values(p.eyes).some((e) => e.examinations === 19),
  )!;
  const eye = Object.entries(candidate.eyes).find(([, e]) => e.examinations === 19)![0];
  const predictions = [];
  for (let index = 4; index < 19; index += 1) {
    predictions.push(await api.predict(candidate.pseudo_id, eye, index, "statistical"));
  }
  assert.equal(predictions.length, 15);
  for (const p of predictions) {
    assert.ok(["Winner", "Stabilizer", "Loser"].includes(p.label));
  }
});
