import type { ScreeningRecord, Summary } from "./types.js";

export const DISCLAIMER =
  "Screening aid only — this is not a diagnosis. Refer to a specialist for clinical confirmation.";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Result view: stage name and numbers verbatim from the server record,
 * five probability bars, the DR flag, and the fixed disclaimer banner. */
export function renderResult(record: ScreeningRecord): string {
  const bars = record.probabilities
    .map((p, grade) => {
      const pct = (p * 100).toFixed(1);
      return (
        `<div class="prob-row" data-grade="${grade}">` +
        `<span class="prob-label">Grade ${grade}</span>` +
        `<span class="prob-bar" style="width:${pct}%"></span>` +
        `<span class="prob-value">${pct}%</span>` +
        `</div>`
      );
    })
    .join("");
  const flag = record.dr_positive
    ? `<span class="flag positive">DR positive</span>`
    : `<span class="flag negative">DR negative</span>`;
  const decision = record.technician_decision
    ? `<p class="decision">Decision: ${esc(record.technician_decision)}</p>`
    : "";
  return (
    `<section class="result" data-screening-id="${esc(record.screening_id)}">` +
    `<h2 class="stage-name">${esc(record.stage_name)}</h2>` +
    flag +
    `<div class="prob-bars">${bars}</div>` +
    decision +
    `<p class="model-version">Model ${esc(record.model_version)}</p>` +
    `<p class="disclaimer">${esc(DISCLAIMER)}</p>` +
    `</section>`
  );
}

export function renderError(message: string, retryable: boolean): string {
  const retry = retryable ? `<button class="retry">Retry</button>` : "";
  return `<div class="error-banner">${esc(message)}${retry}</div>`;
}

/** Per-patient history rows, in the order the server returned them. */
export function renderHistory(records: ScreeningRecord[]): string {
  if (records.length === 0) {
    return `<p class="history-empty">No screenings recorded.</p>`;
  }
  const rows = records
    .map(
      (r) =>
        `<tr data-screening-id="${esc(r.screening_id)}">` +
        `<td>${esc(r.created_at)}</td>` +
        `<td>${esc(r.patient_code)}</td>` +
        `<td>${esc(r.stage_name)}</td>` +
        `<td>${esc(r.technician_decision ?? "—")}</td>` +
        `</tr>`,
    )
    .join("");
  return (
    `<table class="history"><thead><tr>` +
    `<th>Time</th><th>Patient</th><th>Stage</th><th>Decision</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

/** Dashboard counts straight from the summary endpoint; no client math. */
export function renderSummary(summary: Summary): string {
  const cells = summary.per_grade
    .map((count, grade) => `<div class="grade-count" data-grade="${grade}">${count}</div>`)
    .join("");
  const rate = (summary.dr_positive_rate * 100).toFixed(1);
  return (
    `<section class="dashboard">` +
    `<p class="totals">${summary.total_screenings} screenings · ${summary.total_patients} patients</p>` +
    `<div class="grade-counts">${cells}</div>` +
    `<p class="positive-rate">DR-positive rate: ${rate}%</p>` +
    `</section>`
  );
}
