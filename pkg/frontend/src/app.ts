/** DOM wiring: pair queue, synced panes, criteria form, keyboard flow. */

import {
  ApiClient,
  ApiError,
  RetryQueue,
  type CriterionId,
  type ImageRole,
  type ScoreRow,
  type Verdict,
} from "./api.js";
import {
  CRITERIA,
  CRITERION_LABELS,
  ReviewSession,
  pairsFromManifest,
  type PairRef,
} from "./review.js";
import { SyncedPanes, transformCss, type PaneId } from "./viewport.js";

const LEFT_SOURCES: readonly ("raw" | "reference" | "white")[] = [
  "raw",
  "reference",
  "white",
];

const PAGE_TEMPLATE = `
  <header>
    <h1>docenhance review</h1>
    <span id="progress"></span>
    <button id="pending" hidden></button>
  </header>
  <main>
    <nav id="queue"></nav>
    <section class="viewer">
      <div class="panes">
        <figure>
          <figcaption id="left-caption"></figcaption>
          <div class="pane" id="pane-left"><img id="img-left" alt="capture"></div>
        </figure>
        <figure>
          <figcaption id="right-caption"></figcaption>
          <div class="pane" id="pane-right"><img id="img-right" alt="rendition"></div>
        </figure>
      </div>
      <form id="judgment">
        <fieldset id="criteria"></fieldset>
        <input id="note" type="text" placeholder="note (required when accepting over a failed criterion)">
        <div class="verdicts">
          <button type="button" id="accept">Accept (a)</button>
          <button type="button" id="discard">Discard (d)</button>
        </div>
        <p id="flash" role="alert"></p>
      </form>
      <aside>
        <table id="scores"></table>
        <p id="history"></p>
      </aside>
    </section>
  </main>
`;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function formatScore(row: ScoreRow): string {
  if (row.error !== null && row.error !== undefined) return "failed";
  if (row.value === null) return "-";
  if (typeof row.value === "string") return row.value;
  return row.value.toFixed(4);
}

class App {
  private readonly client = new ApiClient("");
  private readonly queue = new RetryQueue((p) => this.client.postJudgment(p));
  private session!: ReviewSession;
  private panes: SyncedPanes | null = null;
  private leftSource = 0;

  async start(root: HTMLElement): Promise<void> {
    const manifest = await this.client.manifest();
    const pairs = pairsFromManifest(manifest);
    if (pairs.length === 0) {
      root.textContent =
        "Nothing to review: no manifest entry carries an enhanced rendition.";
      return;
    }
    root.innerHTML = PAGE_TEMPLATE;
    this.session = new ReviewSession(pairs, (p) => this.queue.submit(p));
    this.buildCriteriaForm();
    this.buildQueueList();
    this.bindPanes();
    this.bindButtons();
    this.bindKeys();
    window.setInterval(() => void this.flushPending(), 5000);
    await this.showCurrent();
  }

  private buildCriteriaForm(): void {
    const fieldset = el<HTMLFieldSetElement>("criteria");
    CRITERIA.forEach((id, i) => {
      const label = document.createElement("label");
      const box = document.createElement("input");
      box.type = "checkbox";
      box.id = `crit-${id}`;
      box.checked = true;
      box.addEventListener("change", () => {
        this.session.draft.set(id, box.checked);
      });
      label.append(box, ` ${CRITERION_LABELS[id]} (${i + 1})`);
      fieldset.append(label);
    });
    const note = el<HTMLInputElement>("note");
    note.addEventListener("input", () => {
      this.session.draft.note = note.value;
    });
  }

  private buildQueueList(): void {
    const nav = el<HTMLElement>("queue");
    this.session.pairs.forEach((pair, i) => {
      const button = document.createElement("button");
      button.type = "button";
      button.textContent = `${pair.entry} / ${pair.engine}`;
      button.addEventListener("click", () => {
        this.session.goTo(i);
        void this.showCurrent();
      });
      nav.append(button);
    });
  }

  private bindPanes(): void {
    for (const side of ["left", "right"] as const) {
      const pane = el<HTMLDivElement>(`pane-${side}`);
      pane.addEventListener("wheel", (event) => {
        if (this.panes === null) return;
        event.preventDefault();
        const box = pane.getBoundingClientRect();
        this.panes.wheelZoom(
          side,
          event.clientX - box.left,
          event.clientY - box.top,
          event.deltaY,
        );
      });
      let dragging = false;
      pane.addEventListener("pointerdown", (event) => {
        dragging = true;
        pane.setPointerCapture(event.pointerId);
      });
      pane.addEventListener("pointermove", (event) => {
        if (dragging && this.panes !== null) {
          this.panes.dragPan(event.movementX, event.movementY);
        }
      });
      pane.addEventListener("pointerup", () => {
        dragging = false;
      });
    }
  }

  private bindButtons(): void {
    el<HTMLButtonElement>("accept").addEventListener("click", () => {
      void this.judge("accept");
    });
    el<HTMLButtonElement>("discard").addEventListener("click", () => {
      void this.judge("discard");
    });
    el<HTMLButtonElement>("pending").addEventListener("click", () => {
      void this.flushPending();
    });
  }

  private bindKeys(): void {
    document.addEventListener("keydown", (event) => {
      if (event.target instanceof HTMLInputElement && event.target.type === "text") {
        return; // typing a note
      }
      const digit = Number.parseInt(event.key, 10);
      if (digit >= 1 && digit <= CRITERIA.length) {
        this.toggleCriterion(CRITERIA[digit - 1]);
      } else if (event.key === "a") {
        void this.judge("accept");
      } else if (event.key === "d") {
        void this.judge("discard");
      } else if (event.key === "ArrowRight") {
        this.session.next();
        void this.showCurrent();
      } else if (event.key === "ArrowLeft") {
        this.session.prev();
        void this.showCurrent();
      } else if (event.key === "r") {
        this.panes?.reset();
      } else if (event.key === "w") {
        this.leftSource = (this.leftSource + 1) % LEFT_SOURCES.length;
        this.loadImages();
      }
    });
  }

  private toggleCriterion(id: CriterionId): void {
    this.session.draft.toggle(id);
    el<HTMLInputElement>(`crit-${id}`).checked = this.session.draft.criteria[id];
  }

  private async judge(verdict: Verdict): Promise<void> {
    const flash = el<HTMLParagraphElement>("flash");
    try {
      const outcome = await this.session.judge(verdict);
      flash.textContent =
        outcome.record === null
          ? `${verdict} queued (server unreachable)`
          : `${verdict} saved as record ${outcome.record}`;
      await this.showCurrent();
    } catch (err) {
      flash.textContent = err instanceof Error ? err.message : String(err);
      if (err instanceof ApiError) return;
    }
    this.renderPending();
  }

  private async flushPending(): Promise<void> {
    await this.queue.flush();
    this.renderPending();
    await this.renderProgress();
  }

  private renderPending(): void {
    const button = el<HTMLButtonElement>("pending");
    const count = this.queue.pending.length;
    button.hidden = count === 0;
    button.textContent = `${count} unsent - retry now`;
  }

  private async showCurrent(): Promise<void> {
    const pair = this.session.current();
    if (pair === null) return;
    this.syncForm();
    this.loadImages();
    this.markQueue();
    await Promise.all([
      this.renderScores(pair),
      this.renderHistory(pair),
      this.renderProgress(),
    ]);
  }

  private syncForm(): void {
    for (const id of CRITERIA) {
      el<HTMLInputElement>(`crit-${id}`).checked = this.session.draft.criteria[id];
    }
    el<HTMLInputElement>("note").value = this.session.draft.note;
    el<HTMLParagraphElement>("flash").textContent = "";
  }

  private loadImages(): void {
    const pair = this.session.current();
    if (pair === null) return;
    const source = LEFT_SOURCES[this.leftSource];
    const left = el<HTMLImageElement>("img-left");
    const right = el<HTMLImageElement>("img-right");
    el<HTMLElement>("left-caption").textContent = `${pair.entry} - ${source}`;
    el<HTMLElement>("right-caption").textContent = `${pair.entry} - ${pair.engine}`;
    left.onload = () => this.fitPanes(pair, left);
    left.src = this.client.imageUrl(pair.entry, source);
    right.src = this.client.imageUrl(pair.entry, { engine: pair.engine });
  }

  private fitPanes(pair: PairRef, image: HTMLImageElement): void {
    const paneLeft = el<HTMLDivElement>("pane-left");
    this.panes = new SyncedPanes(
      image.naturalWidth,
      image.naturalHeight,
      paneLeft.clientWidth,
      paneLeft.clientHeight,
    );
    for (const side of ["left", "right"] as const) {
      const img = el<HTMLImageElement>(`img-${side}`);
      this.attachPane(side, img);
    }
  }

  private attachPane(side: PaneId, img: HTMLImageElement): void {
    this.panes?.attach(side, (view) => {
      img.style.transform = transformCss(view);
    });
  }

  private markQueue(): void {
    const buttons = el<HTMLElement>("queue").querySelectorAll("button");
    this.session.pairs.forEach((pair, i) => {
      const judged = this.session.judgmentFor(pair);
      const state =
        judged === undefined ? "" : judged.payload.verdict === "accept" ? "✓" : "✗";
      buttons[i].dataset.state = state;
      buttons[i].classList.toggle("current", i === this.session.position());
    });
  }

  private async renderScores(pair: PairRef): Promise<void> {
    const table = el<HTMLTableElement>("scores");
    try {
      const rows = (await this.client.scores(pair.entry)).filter(
        (row) => row.engine === pair.engine,
      );
      table.innerHTML = rows
        .map(
          (row) =>
            `<tr><td>${row.metric}</td><td>${formatScore(row)}</td></tr>`,
        )
        .join("");
    } catch {
      table.innerHTML = "";
    }
  }

  private async renderHistory(pair: PairRef): Promise<void> {
    const line = el<HTMLParagraphElement>("history");
    try {
      const records = await this.client.history(pair.entry, pair.engine);
      line.textContent =
        records.length === 0
          ? "not yet judged"
          : `${records.length} judgment(s); latest: ${records[records.length - 1].verdict}`;
    } catch {
      line.textContent = "";
    }
  }

  private async renderProgress(): Promise<void> {
    try {
      const p = await this.client.progress();
      el<HTMLSpanElement>("progress").textContent =
        `${p.reviewed}/${p.total_pairs} reviewed - ${p.accepted} accepted, ${p.discarded} discarded`;
    } catch {
      // header stays stale while the server is unreachable
    }
  }
}

new App().start(el<HTMLElement>("app")).catch((err) => {
  el<HTMLElement>("app").textContent =
    err instanceof Error ? err.message : String(err);
});
