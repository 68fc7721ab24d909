/** Typed client for the annotation service's HTTP+JSON API. */

export type Stage = 1 | 2;

export interface TaskPayload {
  task_id: string;
  stage: Stage;
  shown_text: string;
  pair_original?: string;
}

export interface DonePayload {
  status: "done";
}

export interface LabelBody {
  task_id: string;
  annotator_id: string;
  stage: Stage;
  value: string;
}

export interface LabelAck {
  status: string;
  replaced: boolean;
}

export interface StageProgress {
  total: number;
  by_annotator: Record<string, number>;
}

export interface ProgressPayload {
  stage1: StageProgress;
  stage2: StageProgress;
}

export interface StageAgreement {
  n: number;
  skipped: number;
  observed_agreement: number;
  kappa: number;
  confusion: Record<string, Record<string, number>>;
}

export interface InsufficientData {
  status: string;
}

export interface AgreementPayload {
  annotators: string[] | null;
  stage1: StageAgreement | InsufficientData;
  stage2: StageAgreement | InsufficientData;
}

export interface VeracityPayload {
  by_pos: Record<string, { fake_fraction: number; labels: number }>;
}

export function isDone(p: TaskPayload | DonePayload): p is DonePayload {
  return (p as DonePayload).status === "done";
}

export function hasKappa(
  s: StageAgreement | InsufficientData,
): s is StageAgreement {
  return typeof (s as StageAgreement).kappa === "number";
}

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

/** Calls the service endpoints; consumed by the app, stubbed in tests. */
export interface Api {
  nextTask(annotator: string, stage: Stage): Promise<TaskPayload | DonePayload>;
  postLabel(body: LabelBody): Promise<LabelAck>;
  progress(): Promise<ProgressPayload>;
  agreement(): Promise<AgreementPayload>;
  veracity(): Promise<VeracityPayload>;
}

async function asJson<T>(response: Response): Promise<T> {
  let body: unknown = null;
  try {
    body = await response.json();
  } catch {
    /* non-JSON error body */
  }
  if (!response.ok) {
    const message =
      body && typeof body === "object" && "error" in body
        ? String((body as { error: unknown }).error)
        : `HTTP ${response.status}`;
    throw new ApiError(response.status, message);
  }
  return body as T;
}

export function makeApi(baseUrl = ""): Api {
  return {
    async nextTask(annotator, stage) {
      const params = new URLSearchParams({
        annotator,
        stage: String(stage),
      });
      return asJson(await fetch(`${baseUrl}/api/tasks/next?${params}`));
    },
    async postLabel(body) {
      return asJson(
        await fetch(`${baseUrl}/api/labels`, {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify(body),
        }),
      );
    },
    async progress() {
      return asJson(await fetch(`${baseUrl}/api/progress`));
    },
    async agreement() {
      return asJson(await fetch(`${baseUrl}/api/agreement`));
    },
    async veracity() {
      return asJson(await fetch(`${baseUrl}/api/veracity_stats`));
    },
  };
}
