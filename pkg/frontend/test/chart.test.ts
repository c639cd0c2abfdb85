import assert from "node:assert/strict";
import { test } from "node:test";

import { DashboardApi } from "../src/api.js";
import {
  renderAgreementDots,
  renderAgreementTable,
  renderVaPanel,
} from "../src/chart.js";
import { AnnotationSession } from "../src/state.js";
import { emptyAgreement, recordAgreement } from "../src/wsl.js";
import { FakeService, seriesFromLogmar } from "./helpers.js";

test("acuity panel markup contains only the visible examinations", async () => {
  // distinctive decimals: visible 0.63..., hidden 0.0398 (logMAR 1.4)
  const series = seriesFromLogmar([0.2, 0.2, 0.2, 0.2, 0.2, 1.4, 1.4, 1.4]);
  const service = new FakeService(series);
  const session = new AnnotationSession(new DashboardApi("", service.fetch), "p1", "right");
  await session.start();
  const markup = renderVaPanel(session.visiblePoints(), session.totalExaminations);
  assert.ok(markup.includes("exam 0:"));
  assert.ok(markup.includes("exam 3:"));
  assert.ok(!markup.includes("exam 4:"), "forecast target must stay hidden");
  assert.ok(!markup.includes("exam 5:"));
  assert.ok(!markup.includes("1.40 logMAR"), "future values must not leak into markup");
});

test("markup gains the revealed examination after submission", async () => {
  const series = seriesFromLogmar([0.2, 0.2, 0.2, 0.2, 0.5, 0.5, 0.5, 0.5]);
  const service = new FakeService(series);
  const session = new AnnotationSession(new DashboardApi("", service.fetch), "p1", "right");
  await session.start();
  await session.submit("Loser");
  const markup = renderVaPanel(session.visiblePoints(), session.totalExaminations);
  assert.ok(markup.includes("exam 4:"));
  assert.ok(!markup.includes("exam 5:"));
});

test("agreement table shows counts and rate", () => {
  const counts = emptyAgreement();
  recordAgreement(counts, "Stabilizer", "Stabilizer");
  recordAgreement(counts, "Loser", "Winner");
  const html = renderAgreementTable(counts);
  assert.ok(html.includes("correct <strong>1</strong> of"));
  assert.ok(html.includes("<strong>2</strong>"));
  assert.ok(html.includes("50.0%"));
});

test("agreement dots color by correctness", () => {
  const markup = renderAgreementDots(
    [
      {
        name: "you",
        entries: [
          { index: 4, forecast: "Winner", truth: "Winner", correct: true },
          { index: 5, forecast: "Winner", truth: "Loser", correct: false },
        ],
      },
    ],
    10,
  );
  assert.ok(markup.includes("#8dc73e"));
  assert.ok(markup.includes("#ed135a"));
  assert.ok(markup.includes("forecast Winner, truth Loser"));
});
