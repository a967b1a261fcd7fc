import type { PointResponse } from "./types";

export interface TooltipRow {
  label: string;
  tier: string;
  decay: string;
  k: number;
}

export interface TooltipModel {
  score: number;
  cellId: string;
  wardId: string | null;
  rows: TooltipRow[];
  /** "required: <name> absent" when a required entry gates this cell. */
  gatedNote: string | null;
}

export function buildTooltip(point: PointResponse): TooltipModel {
  const rows = point.entries.map((e) => ({
    label: e.members.join(" + "),
    tier: e.tier,
    decay: e.decay,
    k: e.k,
  }));
  let gatedNote: string | null = null;
  if (point.score === 0) {
    const gating = point.entries.filter((e) => e.tier === "required" && e.k === 0);
    if (gating.length > 0) {
      gatedNote = `required: ${gating.map((e) => e.members.join(" + ")).join(", ")} absent`;
    }
  }
  return {
    score: point.score,
    cellId: point.cell_id,
    wardId: point.ward_id,
    rows,
    gatedNote,
  };
}

export function renderTooltip(el: HTMLElement, model: TooltipModel): void {
  el.replaceChildren();

  const head = document.createElement("div");
  head.className = "tip-head";
  const scoreEl = document.createElement("span");
  scoreEl.className = "tip-score";
  scoreEl.textContent = model.score.toFixed(3);
  head.appendChild(scoreEl);
  const cellEl = document.createElement("span");
  cellEl.className = "tip-cell";
  cellEl.textContent = model.wardId
    ? `cell ${model.cellId} · ${model.wardId}`
    : `cell ${model.cellId}`;
  head.appendChild(cellEl);
  el.appendChild(head);

  const table = document.createElement("table");
  table.className = "tip-entries";
  for (const row of model.rows) {
    const tr = document.createElement("tr");
    const name = document.createElement("td");
    name.className = "tip-label";
    name.textContent = row.label;
    tr.appendChild(name);
    const meta = document.createElement("td");
    meta.className = "tip-meta";
    meta.textContent = `${row.tier} / ${row.decay}`;
    tr.appendChild(meta);
    const k = document.createElement("td");
    k.className = "tip-k";
    k.textContent = `k=${row.k}`;
    k.dataset.k = String(row.k);
    tr.appendChild(k);
    table.appendChild(tr);
  }
  el.appendChild(table);

  if (model.gatedNote) {
    const note = document.createElement("div");
    note.className = "tip-gated";
    note.textContent = model.gatedNote;
    el.appendChild(note);
  }
}
