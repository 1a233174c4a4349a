import { ScreeningApi } from "./api.js";
import { moveCrop, resizeCrop } from "./crop.js";
import { DISCLAIMER, renderError, renderHistory, renderResult, renderSummary } from "./render.js";
import { ScreeningSession, StagedImage } from "./session.js";

const api = new ScreeningApi("");
const session = new ScreeningSession(api);

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

async function stageFile(file: File): Promise<void> {
  const url = URL.createObjectURL(file);
  try {
    const img = new Image();
    await new Promise<void>((resolve, reject) => {
      img.onload = () => resolve();
      img.onerror = () => reject(new Error("could not decode the file"));
      img.src = url;
    });
    const staged: StagedImage = {
      blob: file,
      mimeType: file.type,
      width: img.naturalWidth,
      height: img.naturalHeight,
    };
    session.stageImage(staged);
    const preview = $("preview") as HTMLImageElement;
    preview.src = url;
    preview.hidden = false;
    drawCropOverlay();
    refreshControls();
  } catch (err) {
    URL.revokeObjectURL(url);
    $("result").innerHTML = renderError(String(err), false);
  }
}

function drawCropOverlay(): void {
  if (!session.staged || !session.crop) return;
  const overlay = $("crop-overlay");
  const scale = ($("preview") as HTMLImageElement).clientWidth / session.staged.width;
  overlay.style.left = `${session.crop.x * scale}px`;
  overlay.style.top = `${session.crop.y * scale}px`;
  overlay.style.width = `${session.crop.side * scale}px`;
  overlay.style.height = `${session.crop.side * scale}px`;
  overlay.hidden = false;
}

function refreshControls(): void {
  ($("submit") as HTMLButtonElement).disabled = !session.canSubmit;
  ($("decide-refer") as HTMLButtonElement).disabled = !session.canDecide;
  ($("decide-monitor") as HTMLButtonElement).disabled = !session.canDecide;
}

async function refreshHistoryAndSummary(): Promise<void> {
  try {
    const list = await api.listScreenings(session.patientCode || undefined);
    $("history").innerHTML = renderHistory(list.records);
    $("summary").innerHTML = renderSummary(await api.getSummary());
  } catch (err) {
    $("history").innerHTML = renderError(`could not load history: ${String(err)}`, true);
  }
}

export function wireUp(): void {
  $("disclaimer-static").textContent = DISCLAIMER;

  $("file-input").addEventListener("change", (ev) => {
    const input = ev.target as HTMLInputElement;
    if (input.files && input.files[0]) void stageFile(input.files[0]);
  });

  $("patient-code").addEventListener("input", (ev) => {
    session.setPatientCode((ev.target as HTMLInputElement).value);
    refreshControls();
  });

  const nudge = (dx: number, dy: number, grow: number) => {
    if (!session.staged || !session.crop) return;
    let rect = moveCrop(session.crop, dx, dy, session.staged.width, session.staged.height);
    rect = resizeCrop(rect, grow, session.staged.width, session.staged.height);
    session.setCrop(rect);
    drawCropOverlay();
  };
  $("crop-left").addEventListener("click", () => nudge(-16, 0, 0));
  $("crop-right").addEventListener("click", () => nudge(16, 0, 0));
  $("crop-up").addEventListener("click", () => nudge(0, -16, 0));
  $("crop-down").addEventListener("click", () => nudge(0, 16, 0));
  $("crop-grow").addEventListener("click", () => nudge(0, 0, 16));
  $("crop-shrink").addEventListener("click", () => nudge(0, 0, -16));

  $("submit").addEventListener("click", async () => {
    refreshControls();
    try {
      const record = await session.submit();
      $("result").innerHTML = renderResult(record);
      await refreshHistoryAndSummary();
    } catch {
      if (session.lastError) {
        $("result").innerHTML = renderError(session.lastError.message, session.lastError.retryable);
      }
    } finally {
      refreshControls();
    }
  });

  const decide = async (decision: "refer" | "monitor") => {
    try {
      const record = await session.recordDecision(decision);
      $("result").innerHTML = renderResult(record);
      await refreshHistoryAndSummary();
    } catch (err) {
      $("result").innerHTML = renderError(String(err), false);
    }
  };
  $("decide-refer").addEventListener("click", () => void decide("refer"));
  $("decide-monitor").addEventListener("click", () => void decide("monitor"));

  refreshControls();
  void refreshHistoryAndSummary();
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  wireUp();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", wireUp);
}
