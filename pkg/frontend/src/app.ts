/** Single-page annotation app: task screens, dashboard, error handling.
 *
 * The server is the source of truth; the app holds nothing but the
 * annotator id and the task currently on screen. Every choice maps to
 * exactly one POST (an in-flight guard swallows double clicks), and a
 * failed POST keeps the task on screen behind a retry banner.
 */

import {
  Api,
  DonePayload,
  Stage,
  TaskPayload,
  hasKappa,
  isDone,
} from "./api.js";

const STAGE1_GUIDANCE =
  "Decide whether this sentence was written by a person or produced by a machine.";
const STAGE2_GUIDANCE =
  "Compare the manipulated sentence to its original. Choose \"fake\" if it " +
  "differs in meaningful ways (for example, contradictory information); " +
  "choose \"true\" if the difference is only grammatical or a paraphrase.";

export class App {
  private annotator = "";
  private stage: Stage = 1;
  private current: TaskPayload | null = null;
  private inFlight = false;
  private retryAction: (() => Promise<void>) | null = null;

  constructor(
    private root: HTMLElement,
    private api: Api,
  ) {
    this.renderLogin();
  }

  // ---------------------------------------------------------------- login

  private renderLogin(): void {
    this.root.dataset.screen = "login";
    this.root.innerHTML = `
      <h1>Annotation study</h1>
      <label>Annotator id
        <input id="annotator" type="text" autocomplete="off" />
      </label>
      <div class="actions">
        <button id="start-stage1">Start stage 1</button>
        <button id="start-stage2">Start stage 2</button>
        <button id="open-dashboard">Dashboard</button>
      </div>
      <p id="login-error" class="error" hidden></p>
    `;
    const input = this.query<HTMLInputElement>("#annotator");
    input.value = this.annotator;
    const begin = (stage: Stage) => {
      const name = input.value.trim();
      if (!name) {
        const err = this.query<HTMLElement>("#login-error");
        err.hidden = false;
        err.textContent = "Enter an annotator id first.";
        return;
      }
      void this.start(name, stage);
    };
    this.query("#start-stage1").addEventListener("click", () => begin(1));
    this.query("#start-stage2").addEventListener("click", () => begin(2));
    this.query("#open-dashboard").addEventListener("click", () => {
      void this.showDashboard();
    });
  }

  // ---------------------------------------------------------------- tasks

  async start(annotator: string, stage: Stage): Promise<void> {
    this.annotator = annotator;
    this.stage = stage;
    await this.loadNext();
  }

  private async loadNext(): Promise<void> {
    await this.guarded(async () => {
      const payload = await this.api.nextTask(this.annotator, this.stage);
      this.showTask(payload);
    }, () => this.loadNext());
  }

  private showTask(payload: TaskPayload | DonePayload): void {
    if (isDone(payload)) {
      this.current = null;
      this.renderDone();
      return;
    }
    if (payload.stage === 2 && !payload.pair_original) {
      this.current = null;
      this.renderBrokenTask(payload.task_id);
      return;
    }
    this.current = payload;
    if (payload.stage === 1) {
      this.renderStage1(payload);
    } else {
      this.renderStage2(payload);
    }
  }

  private renderStage1(task: TaskPayload): void {
    this.root.dataset.screen = "stage1";
    this.root.innerHTML = `
      <p class="guidance">${STAGE1_GUIDANCE}</p>
      <blockquote class="sentence" dir="rtl" id="shown-text"></blockquote>
      <div class="actions">
        <button id="choose-human">human</button>
        <button id="choose-machine">machine</button>
      </div>
      ${this.bannerHtml()}
    `;
    // Only the sentence itself is rendered in stage 1: no pairing
    // information, no origin.
    this.query("#shown-text").textContent = task.shown_text;
    this.wireChoice("#choose-human", "human");
    this.wireChoice("#choose-machine", "machine");
    this.wireBanner();
  }

  private renderStage2(task: TaskPayload): void {
    this.root.dataset.screen = "stage2";
    this.root.innerHTML = `
      <p class="guidance">${STAGE2_GUIDANCE}</p>
      <div class="pair">
        <section>
          <h2>Original</h2>
          <blockquote class="sentence" dir="rtl" id="pair-original"></blockquote>
        </section>
        <section>
          <h2>Manipulated</h2>
          <blockquote class="sentence" dir="rtl" id="shown-text"></blockquote>
        </section>
      </div>
      <div class="actions">
        <button id="choose-true">true</button>
        <button id="choose-fake">fake</button>
      </div>
      ${this.bannerHtml()}
    `;
    this.query("#pair-original").textContent = task.pair_original ?? "";
    this.query("#shown-text").textContent = task.shown_text;
    this.wireChoice("#choose-true", "true");
    this.wireChoice("#choose-fake", "fake");
    this.wireBanner();
  }

  private wireChoice(selector: string, value: string): void {
    this.query(selector).addEventListener("click", () => {
      void this.choose(value);
    });
  }

  async choose(value: string): Promise<void> {
    const task = this.current;
    if (!task || this.inFlight) {
      return;
    }
    for (const button of this.root.querySelectorAll("button")) {
      button.disabled = true;
    }
    await this.guarded(
      async () => {
        await this.api.postLabel({
          task_id: task.task_id,
          annotator_id: this.annotator,
          stage: task.stage,
          value,
        });
        const payload = await this.api.nextTask(this.annotator, this.stage);
        this.showTask(payload);
      },
      () => this.choose(value),
    );
  }

  private renderDone(): void {
    this.root.dataset.screen = "done";
    this.root.innerHTML = `
      <h1>Stage ${this.stage} complete</h1>
      <p>No tasks left for this stage. Thank you.</p>
      <div class="actions">
        <button id="back">Back</button>
        <button id="open-dashboard">Dashboard</button>
      </div>
    `;
    this.query("#back").addEventListener("click", () => this.renderLogin());
    this.query("#open-dashboard").addEventListener("click", () => {
      void this.showDashboard();
    });
  }

  private renderBrokenTask(taskId: string): void {
    this.root.dataset.screen = "error";
    this.root.innerHTML = `
      <h1>Broken task</h1>
      <p class="error">Task ${taskId} is a stage-2 task without its
      original sentence; it cannot be annotated.</p>
      <div class="actions"><button id="back">Back</button></div>
    `;
    this.query("#back").addEventListener("click", () => this.renderLogin());
  }

  // ---------------------------------------------------------------- dashboard

  async showDashboard(): Promise<void> {
    await this.guarded(async () => {
      const [progress, agreement, veracity] = await Promise.all([
        this.api.progress(),
        this.api.agreement(),
        this.api.veracity(),
      ]);
      this.root.dataset.screen = "dashboard";
      const stageBlock = (label: string, stats: typeof agreement.stage1) => {
        if (!hasKappa(stats)) {
          return `<section class="stage"><h2>${label}</h2>
            <p class="kappa" data-kappa="">insufficient data</p></section>`;
        }
        return `<section class="stage"><h2>${label}</h2>
          <p class="kappa" data-kappa="${stats.kappa}">
            kappa ${stats.kappa.toFixed(4)}
            (observed agreement ${stats.observed_agreement.toFixed(4)},
            n=${stats.n}, skipped ${stats.skipped})
          </p></section>`;
      };
      const rows = Object.entries(veracity.by_pos)
        .map(
          ([pos, stats]) => `
          <tr data-pos="${pos}">
            <td>${pos}</td>
            <td>${(100 * stats.fake_fraction).toFixed(1)}%</td>
            <td>${stats.labels}</td>
          </tr>`,
        )
        .join("");
      this.root.innerHTML = `
        <h1>Dashboard</h1>
        <p id="progress">
          Stage 1: ${this.progressLine(progress.stage1)} |
          Stage 2: ${this.progressLine(progress.stage2)}
        </p>
        <h2>Agreement${
          agreement.annotators
            ? ` (${agreement.annotators.join(" vs ")})`
            : ""
        }</h2>
        ${stageBlock("Stage 1", agreement.stage1)}
        ${stageBlock("Stage 2", agreement.stage2)}
        <h2>Veracity changes by POS</h2>
        <table id="veracity">
          <thead><tr><th>POS</th><th>fake</th><th>labels</th></tr></thead>
          <tbody>${rows}</tbody>
        </table>
        <div class="actions"><button id="back">Back</button></div>
      `;
      this.query("#back").addEventListener("click", () => this.renderLogin());
    }, () => this.showDashboard());
  }

  private progressLine(stats: { total: number; by_annotator: Record<string, number> }): string {
    const done = Object.entries(stats.by_annotator)
      .map(([who, n]) => `${who} ${n}/${stats.total}`)
      .join(", ");
    return done || `0/${stats.total}`;
  }

  // ---------------------------------------------------------------- errors

  private bannerHtml(): string {
    return `
      <div id="banner" class="banner" hidden>
        <span id="banner-message"></span>
        <button id="retry">Retry</button>
      </div>
    `;
  }

  private wireBanner(): void {
    this.query("#retry").addEventListener("click", () => {
      const action = this.retryAction;
      this.retryAction = null;
      if (action) {
        void action();
      }
    });
  }

  /** Run an action with the in-flight guard; on failure show the retry
   * banner (or a standalone error screen when no banner exists). */
  private async guarded(
    action: () => Promise<void>,
    retry: () => Promise<void>,
  ): Promise<void> {
    if (this.inFlight) {
      return;
    }
    this.inFlight = true;
    try {
      await action();
      this.root.dataset.error = "";
    } catch (err) {
      this.showFailure(err, retry);
    } finally {
      this.inFlight = false;
    }
  }

  private showFailure(err: unknown, retry: () => Promise<void>): void {
    this.retryAction = retry;
    this.root.dataset.error = "1";
    const message = err instanceof Error ? err.message : String(err);
    const banner = this.root.querySelector<HTMLElement>("#banner");
    if (banner) {
      banner.hidden = false;
      const slot = this.query("#banner-message");
      slot.textContent = `Request failed: ${message}`;
      for (const button of this.root.querySelectorAll("button")) {
        button.disabled = false;
      }
      return;
    }
    this.root.dataset.screen = "error";
    this.root.innerHTML = `
      <h1>Connection problem</h1>
      <p class="error" id="banner-message"></p>
      <div class="actions">
        <button id="retry">Retry</button>
        <button id="back">Back</button>
      </div>
    `;
    this.query("#banner-message").textContent = `Request failed: ${message}`;
    this.wireBanner();
    this.query("#back").addEventListener("click", () => this.renderLogin());
  }

  private query<T extends HTMLElement = HTMLElement>(selector: string): T {
    const found = this.root.querySelector<T>(selector);
    if (!found) {
      throw new Error(`missing element ${selector}`);
    }
    return found;
  }
}

export function createApp(root: HTMLElement, api: Api): App {
  return new App(root, api);
}
