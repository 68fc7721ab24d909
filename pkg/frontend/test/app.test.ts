import { beforeEach, describe, expect, it } from "vitest";

import type {
  AgreementPayload,
  Api,
  DonePayload,
  LabelAck,
  LabelBody,
  ProgressPayload,
  TaskPayload,
  VeracityPayload,
} from "../src/api.js";
import { ApiError } from "../src/api.js";
import { createApp } from "../src/app.js";

const DONE: DonePayload = { status: "done" };

class StubApi implements Api {
  queue: (TaskPayload | DonePayload)[] = [];
  posts: LabelBody[] = [];
  failPostWith: Error | null = null;
  gate: Promise<void> | null = null;
  progressPayload: ProgressPayload = {
    stage1: { total: 3, by_annotator: { a: 1 } },
    stage2: { total: 2, by_annotator: {} },
  };
  agreementPayload: AgreementPayload = {
    annotators: null,
    stage1: { status: "insufficient data" },
    stage2: { status: "insufficient data" },
  };
  veracityPayload: VeracityPayload = { by_pos: {} };

  async nextTask(): Promise<TaskPayload | DonePayload> {
    return this.queue.length ? this.queue[0] : DONE;
  }

  async postLabel(body: LabelBody): Promise<LabelAck> {
    if (this.failPostWith) {
      throw this.failPostWith;
    }
    if (this.gate) {
      await this.gate;
    }
    this.posts.push(body);
    this.queue.shift();
    return { status: "stored", replaced: false };
  }

  async progress(): Promise<ProgressPayload> {
    return this.progressPayload;
  }

  async agreement(): Promise<AgreementPayload> {
    return this.agreementPayload;
  }

  async veracity(): Promise<VeracityPayload> {
    return this.veracityPayload;
  }
}

function stage1Task(i: number): TaskPayload {
  return { task_id: `s1-${i}`, stage: 1, shown_text: `جملة رقم ${i}` };
}

function stage2Task(i: number): TaskPayload {
  return {
    task_id: `s2-${i}`,
    stage: 2,
    shown_text: `مزيف ${i}`,
    pair_original: `اصل ${i}`,
  };
}

async function waitFor(cond: () => boolean, what = "condition"): Promise<void> {
  const start = Date.now();
  while (!cond()) {
    if (Date.now() - start > 5000) {
      throw new Error(`timed out waiting for ${what}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 5));
  }
}

let root: HTMLElement;
let api: StubApi;

beforeEach(() => {
  document.body.innerHTML = '<main id="app"></main>';
  root = document.getElementById("app") as HTMLElement;
  api = new StubApi();
});

describe("stage 1 screen", () => {
  it("renders only the shown text, right to left", async () => {
    api.queue = [stage1Task(0)];
    const app = createApp(root, api);
    await app.start("anno1", 1);
    expect(root.dataset.screen).toBe("stage1");
    const sentence = root.querySelector("#shown-text")!;
    expect(sentence.textContent).toBe("جملة رقم 0");
    expect(sentence.getAttribute("dir")).toBe("rtl");
    expect(root.querySelector("#pair-original")).toBeNull();
    expect(root.innerHTML).not.toContain("gold");
    expect(root.querySelector("#choose-human")).not.toBeNull();
    expect(root.querySelector("#choose-machine")).not.toBeNull();
  });

  it("posts exactly one label per choice, even on double click", async () => {
    api.queue = [stage1Task(0), stage1Task(1)];
    const app = createApp(root, api);
    await app.start("anno1", 1);
    let release!: () => void;
    api.gate = new Promise((resolve) => {
      release = resolve;
    });
    const button = root.querySelector<HTMLButtonElement>("#choose-machine")!;
    button.click();
    button.click();
    button.click();
    release();
    await waitFor(
      () => root.querySelector("#shown-text")?.textContent === "جملة رقم 1",
      "next task",
    );
    expect(api.posts).toEqual([
      { task_id: "s1-0", annotator_id: "anno1", stage: 1, value: "machine" },
    ]);
  });

  it("shows a retry banner on server rejection without losing the task", async () => {
    api.queue = [stage1Task(0)];
    const app = createApp(root, api);
    await app.start("anno1", 1);
    api.failPostWith = new ApiError(400, "bad value");
    root.querySelector<HTMLButtonElement>("#choose-human")!.click();
    await waitFor(() => root.dataset.error === "1", "error banner");
    const banner = root.querySelector<HTMLElement>("#banner")!;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toContain("bad value");
    expect(api.posts).toHaveLength(0);
    expect(root.querySelector("#shown-text")!.textContent).toBe("جملة رقم 0");

    api.failPostWith = null;
    root.querySelector<HTMLButtonElement>("#retry")!.click();
    await waitFor(() => root.dataset.screen === "done", "completion screen");
    expect(api.posts).toHaveLength(1);
  });

  it("shows the completion screen once the queue is exhausted", async () => {
    const app = createApp(root, api);
    await app.start("anno1", 1);
    expect(root.dataset.screen).toBe("done");
    expect(root.textContent).toContain("complete");
  });
});

describe("stage 2 screen", () => {
  it("renders the pair with guidance and posts the verdict", async () => {
    api.queue = [stage2Task(0)];
    const app = createApp(root, api);
    await app.start("anno2", 2);
    expect(root.dataset.screen).toBe("stage2");
    expect(root.querySelector("#pair-original")!.textContent).toBe("اصل 0");
    expect(root.querySelector("#shown-text")!.textContent).toBe("مزيف 0");
    expect(root.querySelector(".guidance")!.textContent).toContain("fake");
    root.querySelector<HTMLButtonElement>("#choose-fake")!.click();
    await waitFor(() => root.dataset.screen === "done", "done");
    expect(api.posts).toEqual([
      { task_id: "s2-0", annotator_id: "anno2", stage: 2, value: "fake" },
    ]);
  });

  it("treats a stage-2 payload without the original as an error state", async () => {
    api.queue = [
      { task_id: "s2-9", stage: 2, shown_text: "مزيف" } as TaskPayload,
    ];
    const app = createApp(root, api);
    await app.start("anno2", 2);
    expect(root.dataset.screen).toBe("error");
    expect(root.textContent).toContain("s2-9");
  });
});

describe("dashboard", () => {
  it("renders kappa and the veracity table from the service payloads", async () => {
    api.agreementPayload = {
      annotators: ["a", "b"],
      stage1: {
        n: 4,
        skipped: 0,
        observed_agreement: 0.75,
        kappa: 0.5,
        confusion: { human: { human: 2 } },
      },
      stage2: { status: "insufficient data" },
    };
    api.veracityPayload = {
      by_pos: {
        N_PROP: { fake_fraction: 0.75, labels: 4 },
        ADJ: { fake_fraction: 0.25, labels: 8 },
      },
    };
    const app = createApp(root, api);
    await app.showDashboard();
    expect(root.dataset.screen).toBe("dashboard");
    const kappas = [...root.querySelectorAll(".kappa")];
    expect(kappas[0].getAttribute("data-kappa")).toBe("0.5");
    expect(kappas[0].textContent).toContain("0.5000");
    expect(kappas[1].textContent).toContain("insufficient data");
    const rows = [...root.querySelectorAll("#veracity tbody tr")];
    expect(rows).toHaveLength(2);
    expect(rows.map((r) => r.getAttribute("data-pos")).sort())
      .toEqual(["ADJ", "N_PROP"]);
    expect(root.querySelector('[data-pos="N_PROP"]')!.textContent)
      .toContain("75.0%");
  });

  it("reports insufficient data when there is no overlap", async () => {
    const app = createApp(root, api);
    await app.showDashboard();
    expect(root.textContent).toContain("insufficient data");
  });
});

describe("login screen", () => {
  it("requires an annotator id before starting", async () => {
    api.queue = [stage1Task(0)];
    createApp(root, api);
    root.querySelector<HTMLButtonElement>("#start-stage1")!.click();
    await waitFor(
      () => !root.querySelector<HTMLElement>("#login-error")!.hidden,
      "login error",
    );
    expect(root.dataset.screen).toBe("login");

    root.querySelector<HTMLInputElement>("#annotator")!.value = "anno1";
    root.querySelector<HTMLButtonElement>("#start-stage1")!.click();
    await waitFor(() => root.dataset.screen === "stage1", "stage 1");
  });
});
