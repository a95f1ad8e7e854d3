/**
 * Scripted UI round-trip: set an anchor, run a raw solve, select two
 * channels, run finetune, then check the header against GET /report.
 * Also asserts that every mutation reached the server via an action post.
 */

import { beforeEach, describe, expect, it } from "vitest";

import { StudioApp, StudioPanels } from "../src/app.js";
import { SessionClient } from "../src/api.js";
import { FakeServer } from "./fakeServer.js";

function makePanels(): StudioPanels {
  const panels = {
    header: document.createElement("header"),
    viewport: document.createElement("div"),
    timeline: document.createElement("div"),
    rmse: document.createElement("div"),
    channels: document.createElement("div"),
    banner: document.createElement("div"),
  };
  document.body.replaceChildren(...Object.values(panels));
  return panels;
}

describe("studio round-trip", () => {
  let server: FakeServer;
  let client: SessionClient;
  let app: StudioApp;
  let panels: StudioPanels;

  beforeEach(async () => {
    server = new FakeServer();
    const id = server.makeSession(20, 6);
    client = new SessionClient("http://fake", server.fetch);
    panels = makePanels();
    app = await StudioApp.connect(client, panels, id);
  });

  function headerText(role: string): string {
    return panels.header.querySelector(`[data-role="${role}"]`)?.textContent ?? "";
  }

  it("anchor, raw solve, channel selection, finetune", async () => {
    // set an anchor at the scrubbed frame
    app.scrubTo(5);
    await app.setAnchorAtCurrentFrame(new Array(6).fill(0));
    expect(app.view.anchorFrames).toEqual([5]);
    expect(panels.timeline.querySelectorAll("button.anchor").length).toBe(1);

    // raw solve populates the report and the viewport's solved layer
    await app.runRawSolve();
    expect(app.report).not.toBeNull();
    expect(panels.viewport.querySelectorAll('g[data-layer]').length).toBe(2);
    expect(panels.rmse.querySelectorAll("polyline").length).toBe(1);

    // select two channels through the channel panel and finetune
    const box = (i: number) =>
      panels.channels.querySelectorAll<HTMLInputElement>("input[type=checkbox]")[i] as HTMLInputElement;
    box(0).click(); // panel re-renders per selection, so re-query each time
    box(4).click();
    expect(app.view.selectedChannels.length).toBe(2);
    await app.finetuneSelection();
    expect(panels.rmse.querySelectorAll("polyline").length).toBe(2);

    // displayed revision and RMSE summary match GET /report
    const report = await client.getReport(app.view.sessionId);
    expect(headerText("revision")).toBe(`rev ${report.revision}`);
    const rawMean = report.rmse.aligned.reduce((a, b) => a + b, 0) / report.rmse.aligned.length;
    const fineMean = (report.rmse.finetuned ?? []).reduce((a, b) => a + b, 0) /
      (report.rmse.finetuned ?? [1]).length;
    expect(headerText("rmse-summary")).toBe(
      `raw ${rawMean.toPrecision(4)} / finetuned ${fineMean.toPrecision(4)}`,
    );

    // every mutation went through the actions endpoint; reads were GETs
    const posts = server.requestLog.filter((r) => r.method === "POST");
    expect(posts.length).toBe(3);
    for (const post of posts) {
      expect(post.path).toMatch(/\/sessions\/[^/]+\/actions$/);
    }
  });

  it("revision in the header tracks every settled request", async () => {
    expect(headerText("revision")).toBe("rev 0");
    await app.runRawSolve();
    expect(headerText("revision")).toBe("rev 1");
    await app.setAnchorAtCurrentFrame(new Array(6).fill(0));
    expect(headerText("revision")).toBe("rev 2");
  });

  it("surfaces a merge prompt on conflict without corrupting local state", async () => {
    await app.runRawSolve();
    const before = app.view;
    server.bumpRevision(app.view.sessionId); // a second editor intervenes
    const result = await app.submitAction({ type: "run_raw_solve" });
    expect(result).toBeNull();
    expect(app.conflictPending).toBe(true);
    expect(panels.banner.querySelector('[data-role="merge-prompt"]')).not.toBeNull();
    expect(app.view.currentFrame).toBe(before.currentFrame);
    expect(app.view.selectedChannels).toEqual(before.selectedChannels);
    // the refreshed revision is the server's
    const state = await client.getState(app.view.sessionId);
    expect(app.view.revision).toBe(state.revision);
  });

  it("weight edits round-trip through edit_weight actions", async () => {
    await app.runRawSolve();
    await app.editWeight(2, 0, 1.7);
    const weights = await client.exportData(app.view.sessionId, "weights");
    expect((weights.frames as number[][])[2]?.[0]).toBe(1); // server clipped
    const posts = server.requestLog.filter((r) => r.method === "POST");
    expect(posts.every((p) => p.path.endsWith("/actions"))).toBe(true);
  });

  it("shows the empty state before any solve", () => {
    expect(headerText("rmse-summary")).toBe("no solve yet");
    expect(panels.rmse.querySelector("svg")).toBeNull();
  });
});
