/**
 * Studio application shell. Owns the view state, talks to the session server
 * through one SessionClient, and re-renders the affected panels after each
 * settled request. All solve-data changes round-trip through applyAction;
 * the client never edits weights or markers locally.
 */

import {
  Action,
  ActionResult,
  ConflictError,
  ReportDocument,
  SessionClient,
  SessionState,
} from "./api.js";
import {
  ViewState,
  acknowledgeRevision,
  initialViewState,
  setAnchorFrames,
  setCurrentFrame,
  setFrameRange,
  toggleChannel,
  toggleOverlay,
} from "./state.js";
import { renderRmsePlot } from "./rmsePlot.js";
import { renderTimeline } from "./timeline.js";
import { MarkerFrame, renderViewport } from "./viewport.js";

export interface StudioPanels {
  header: HTMLElement;
  viewport: HTMLElement;
  timeline: HTMLElement;
  rmse: HTMLElement;
  channels: HTMLElement;
  banner: HTMLElement;
}

export class StudioApp {
  readonly client: SessionClient;
  private readonly panels: StudioPanels;
  view: ViewState;
  serverState: SessionState;
  report: ReportDocument | null = null;
  capturedFrames: MarkerFrame[] | null = null;
  conflictPending = false;

  private constructor(client: SessionClient, panels: StudioPanels, state: SessionState) {
    this.client = client;
    this.panels = panels;
    this.serverState = state;
    this.view = initialViewState(state.id, state.n_frames);
    this.view = acknowledgeRevision(this.view, state.revision);
    this.view = setAnchorFrames(this.view, state.anchors.map((a) => a.frame));
  }

  static async connect(client: SessionClient, panels: StudioPanels, sessionId: string): Promise<StudioApp> {
    const state = await client.getState(sessionId);
    const app = new StudioApp(client, panels, state);
    await app.refreshData();
    app.renderAll();
    return app;
  }

  /** Re-pull server state plus the report and marker export when available. */
  async refreshData(): Promise<void> {
    this.serverState = await this.client.getState(this.view.sessionId);
    this.view = acknowledgeRevision(this.view, this.serverState.revision);
    this.view = setAnchorFrames(this.view, this.serverState.anchors.map((a) => a.frame));
    const markers = await this.client.exportData(this.view.sessionId, "markers");
    this.capturedFrames = markers.frames as MarkerFrame[];
    this.report = this.serverState.report !== undefined
      ? await this.client.getReport(this.view.sessionId)
      : null;
  }

  /**
   * Post an action with the current revision. On a revision conflict the
   * fresh server state is fetched and a non-destructive merge prompt is
   * shown instead of retrying blindly.
   */
  async submitAction(action: Action): Promise<ActionResult | null> {
    try {
      const result = await this.client.applyAction(this.view.sessionId, this.view.revision, action);
      this.view = acknowledgeRevision(this.view, result.revision);
      await this.refreshData();
      this.renderAll();
      return result;
    } catch (err) {
      if (err instanceof ConflictError) {
        this.conflictPending = true;
        await this.refreshData();
        this.renderBanner();
        return null;
      }
      this.renderBanner(err instanceof Error ? err.message : String(err));
      throw err;
    }
  }

  acceptServerState(): void {
    this.conflictPending = false;
    this.renderAll();
  }

  // --- user intents ---------------------------------------------------

  async setAnchorAtCurrentFrame(weights: number[]): Promise<void> {
    await this.submitAction({ type: "set_anchor", frame: this.view.currentFrame, weights });
  }

  async runRawSolve(): Promise<void> {
    await this.submitAction({ type: "run_raw_solve" });
  }

  async editWeight(frame: number, channel: number, value: number): Promise<void> {
    await this.submitAction({ type: "edit_weight", frame, channel, value });
  }

  async finetuneSelection(): Promise<void> {
    await this.submitAction({
      type: "run_finetune",
      channels: this.view.selectedChannels,
      frame_range: this.view.selectedFrameRange,
    });
  }

  scrubTo(frame: number): void {
    this.view = setCurrentFrame(this.view, frame);
    this.renderViewportPanel();
    this.renderTimelinePanel();
    this.renderRmsePanel();
  }

  selectChannel(channel: number): void {
    this.view = toggleChannel(this.view, channel);
    this.renderChannelsPanel();
  }

  brushFrames(first: number, last: number): void {
    this.view = setFrameRange(this.view, first, last);
  }

  toggleOverlayLayer(which: "captured" | "solved" | "errorColormap"): void {
    this.view = toggleOverlay(this.view, which);
    this.renderViewportPanel();
  }

  // --- rendering --------------------------------------------------------

  renderAll(): void {
    this.renderHeader();
    this.renderViewportPanel();
    this.renderTimelinePanel();
    this.renderRmsePanel();
    this.renderChannelsPanel();
    this.renderBanner();
  }

  renderHeader(): void {
    const doc = this.panels.header.ownerDocument;
    this.panels.header.replaceChildren();
    const rev = doc.createElement("span");
    rev.setAttribute("data-role", "revision");
    rev.textContent = `rev ${this.view.revision}`;
    const rmse = doc.createElement("span");
    rmse.setAttribute("data-role", "rmse-summary");
    const summary = this.serverState.report;
    rmse.textContent = summary === undefined
      ? "no solve yet"
      : summary.finetuned !== undefined
        ? `raw ${summary.raw.mean_rmse.toPrecision(4)} / finetuned ${summary.finetuned.mean_rmse.toPrecision(4)}`
        : `raw ${summary.raw.mean_rmse.toPrecision(4)}`;
    this.panels.header.append(rev, rmse);
  }

  renderViewportPanel(): void {
    const captured = this.capturedFrames?.[this.view.currentFrame];
    if (captured === undefined) {
      this.panels.viewport.replaceChildren();
      return;
    }
    const solved = this.report?.aligned.frames[this.view.currentFrame] ?? null;
    renderViewport(this.panels.viewport, {
      captured,
      solved,
      overlays: this.view.overlays,
    });
  }

  renderTimelinePanel(): void {
    renderTimeline(
      this.panels.timeline,
      {
        nFrames: this.view.nFrames,
        currentFrame: this.view.currentFrame,
        anchorFrames: this.view.anchorFrames,
      },
      (frame) => this.scrubTo(frame),
    );
  }

  renderRmsePanel(): void {
    this.panels.rmse.replaceChildren();
    if (this.report === null) {
      return;
    }
    renderRmsePlot(
      this.panels.rmse,
      { raw: this.report.rmse.aligned, finetuned: this.report.rmse.finetuned },
      this.view.currentFrame,
      (frame) => this.scrubTo(frame),
    );
  }

  renderChannelsPanel(): void {
    const doc = this.panels.channels.ownerDocument;
    this.panels.channels.replaceChildren();
    for (const [region, info] of Object.entries(this.serverState.regions)) {
      const group = doc.createElement("fieldset");
      group.dataset.region = region;
      const legend = doc.createElement("legend");
      legend.textContent = region;
      group.appendChild(legend);
      for (const channel of info.channels) {
        const label = doc.createElement("label");
        const box = doc.createElement("input");
        box.type = "checkbox";
        box.dataset.channel = String(channel);
        box.checked = this.view.selectedChannels.includes(channel);
        box.addEventListener("change", () => this.selectChannel(channel));
        label.append(box, doc.createTextNode(this.serverState.channels[channel] ?? `#${channel}`));
        group.appendChild(label);
      }
      this.panels.channels.appendChild(group);
    }
  }

  renderBanner(message?: string): void {
    const doc = this.panels.banner.ownerDocument;
    this.panels.banner.replaceChildren();
    if (this.conflictPending) {
      const prompt = doc.createElement("div");
      prompt.setAttribute("data-role", "merge-prompt");
      prompt.textContent =
        "Someone else changed this session. Review the refreshed state, then re-apply your edit.";
      const accept = doc.createElement("button");
      accept.textContent = "Use server state";
      accept.addEventListener("click", () => this.acceptServerState());
      prompt.appendChild(accept);
      this.panels.banner.appendChild(prompt);
    } else if (message !== undefined) {
      const retry = doc.createElement("div");
      retry.setAttribute("data-role", "retry-banner");
      retry.textContent = `Request failed: ${message}. Your local view is unchanged.`;
      this.panels.banner.appendChild(retry);
    }
  }
}
