import { ApiError, createSession, enroll, getSession, listSessions, recordOutcome } from "./api.js";
import { armColor, drawChart } from "./chart.js";
import type { DesignDescriptor, SessionView } from "./model.js";

// Same-origin API: the server mounts this page under /console.
const BASE = "";
const POLL_MS = 1000;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

let currentId: string | null = null;
let pollTimer: number | undefined;

function setError(text: string | null): void {
  const strip = $("error");
  strip.textContent = text ?? "";
  strip.style.display = text ? "block" : "none";
}

function surface(err: unknown): void {
  if (err instanceof ApiError) {
    setError(`${err.status}: ${err.message}`);
  } else {
    setError(String(err));
  }
}

function descriptorFromForm(): DesignDescriptor {
  const kind = ($("design-kind") as HTMLSelectElement).value;
  const design: DesignDescriptor = { kind };
  if (kind === "dbcd" || kind === "rbcd") {
    design.target = ($("design-target") as HTMLSelectElement).value;
  }
  if (kind === "dbcd") {
    design.gamma = Number(($("design-gamma") as HTMLInputElement).value);
  }
  return design;
}

function renderAssignment(arm: number | null): void {
  const box = $("assignment");
  if (arm === null) {
    box.textContent = "";
    box.style.background = "transparent";
    return;
  }
  box.textContent = `arm ${arm}`;
  box.style.background = armColor(arm);
}

function renderBurnIn(view: SessionView): void {
  const badge = $("burn-in");
  if (view.burn_in && view.burn_in.active) {
    badge.textContent = `burn-in ${view.burn_in.completed} of ${view.burn_in.total}`;
    badge.style.display = "inline-block";
  } else {
    badge.style.display = "none";
  }
}

function renderCounts(view: SessionView): void {
  const rows = [];
  for (let k = 0; k < view.arms; k++) {
    const rho = view.rho_hat ? view.rho_hat[k]!.toFixed(3) : "-";
    rows.push(
      `<tr><td style="color:${armColor(k)}">arm ${k}</td>` +
        `<td>${view.counts.N[k]}</td><td>${view.counts.N_observed[k]}</td>` +
        `<td>${view.counts.S_observed[k]}</td>` +
        `<td>${view.p_hat[k]!.toFixed(3)}</td><td>${rho}</td></tr>`,
    );
  }
  $("counts-body").innerHTML = rows.join("");
}

function renderPending(view: SessionView): void {
  const holder = $("pending");
  holder.innerHTML = "";
  for (const subject of view.pending) {
    const entry = view.history[subject];
    const row = document.createElement("div");
    row.className = "pending-row";
    const label = document.createElement("span");
    label.textContent = `subject ${subject} (arm ${entry ? entry.arm : "?"})`;
    row.appendChild(label);
    for (const success of [true, false]) {
      const btn = document.createElement("button");
      btn.textContent = success ? "success" : "failure";
      btn.onclick = async () => {
        try {
          setError(null);
          await recordOutcome(BASE, currentId!, subject, success);
          await refresh();
        } catch (err) {
          surface(err);
        }
      };
      row.appendChild(btn);
    }
    holder.appendChild(row);
  }
  $("pending-title").style.display = view.pending.length ? "block" : "none";
}

function renderTimeline(view: SessionView): void {
  const items = view.history
    .map((h) => {
      const mark = h.outcome === null ? "?" : h.outcome ? "S" : "F";
      return `<span class="tick" style="border-color:${armColor(h.arm)}">${h.subject}:${mark}</span>`;
    })
    .join(" ");
  $("timeline").innerHTML = items;
}

function render(view: SessionView): void {
  $("session-title").textContent =
    `${view.name || view.id} : ${view.design.kind}` +
    (view.design.target ? ` -> ${view.design.target}` : "") +
    ` (${view.arms} arms, seed ${view.seed}, n=${view.n})`;
  renderBurnIn(view);
  renderCounts(view);
  renderPending(view);
  renderTimeline(view);
  drawChart($("chart") as HTMLCanvasElement, view);
  $("session-panel").style.display = "block";
}

async function refresh(): Promise<void> {
  if (!currentId) return;
  try {
    render(await getSession(BASE, currentId));
  } catch (err) {
    surface(err);
  }
}

async function attach(id: string): Promise<void> {
  currentId = id;
  window.location.hash = id;
  renderAssignment(null);
  await refresh();
  if (pollTimer !== undefined) window.clearInterval(pollTimer);
  pollTimer = window.setInterval(refresh, POLL_MS);
}

async function refreshSessionList(): Promise<void> {
  try {
    const sessions = await listSessions(BASE);
    const select = $("session-list") as HTMLSelectElement;
    select.innerHTML = sessions
      .map((s) => `<option value="${s.id}">${s.name || s.id} (${s.design}, n=${s.n})</option>`)
      .join("");
  } catch (err) {
    surface(err);
  }
}

function wire(): void {
  ($("design-kind") as HTMLSelectElement).onchange = () => {
    const kind = ($("design-kind") as HTMLSelectElement).value;
    $("target-row").style.display = kind === "dbcd" || kind === "rbcd" ? "block" : "none";
    $("gamma-row").style.display = kind === "dbcd" ? "block" : "none";
  };

  $("create").onclick = async () => {
    try {
      setError(null);
      const view = await createSession(BASE, {
        design: descriptorFromForm(),
        arms: Number(($("arms") as HTMLInputElement).value),
        seed: Number(($("seed") as HTMLInputElement).value),
        name: ($("name") as HTMLInputElement).value,
      });
      await refreshSessionList();
      await attach(view.id);
    } catch (err) {
      surface(err);
    }
  };

  $("attach").onclick = async () => {
    const select = $("session-list") as HTMLSelectElement;
    if (select.value) await attach(select.value);
  };

  $("enroll").onclick = async () => {
    if (!currentId) return;
    try {
      setError(null);
      const res = await enroll(BASE, currentId);
      renderAssignment(res.assignment);
      await refresh();
    } catch (err) {
      surface(err);
    }
  };

  void refreshSessionList();
  const fromHash = window.location.hash.replace(/^#/, "");
  if (fromHash) void attach(fromHash);
}

wire();
