// Wires the pieces together: canvas + charts + pointer/keyboard capture.
// The state stream arrives at 1/tick_ms Hz; rendering runs on animation
// frames, decoupled from the network.

import { AutoScale, drawChart } from "./charts.js";
import { SessionClient } from "./client.js";
import { InputGate } from "./input.js";
import { toWorkspace, type Viewport } from "./transform.js";
import { drawWorkspace } from "./render.js";
import {
  applyMessage,
  initialViewState,
  setConnection,
  statesToCsv,
  type ViewState,
} from "./viewstate.js";

function requireCanvas(id: string): HTMLCanvasElement {
  const el = document.getElementById(id);
  if (!(el instanceof HTMLCanvasElement)) throw new Error(`missing canvas #${id}`);
  return el;
}

function defaultServerUrl(): string {
  const fromQuery = new URLSearchParams(location.search).get("server");
  if (fromQuery) return fromQuery;
  return `ws://${location.hostname || "localhost"}:8765`;
}

function start(): void {
  const workspace = requireCanvas("workspace");
  const nelboCanvas = requireCanvas("nelbo-chart");
  const congruenceCanvas = requireCanvas("congruence-chart");
  const statusEl = document.getElementById("status")!;
  const labelsEl = document.getElementById("labels")!;
  const overlayEl = document.getElementById("overlay")!;
  const reconnectBtn = document.getElementById("reconnect")!;
  const downloadBtn = document.getElementById("download")!;

  let vs: ViewState = initialViewState();
  const nelboScale = new AutoScale();

  const client = new SessionClient(defaultServerUrl(), {
    onMessage: (msg) => {
      vs = applyMessage(vs, msg);
    },
    onOpen: () => {
      vs = setConnection(vs, "open");
    },
    onClose: () => {
      vs = setConnection(vs, "closed");
    },
  });
  client.connect();

  const gate = new InputGate(
    (msg) => client.send(msg),
    () => performance.now() / 1000,
    60,
  );

  const viewport = (): Viewport => ({
    width: workspace.width,
    height: workspace.height,
    margin: 10,
  });

  workspace.addEventListener("pointermove", (ev) => {
    const rect = workspace.getBoundingClientRect();
    const px = ((ev.clientX - rect.left) / rect.width) * workspace.width;
    const py = ((ev.clientY - rect.top) / rect.height) * workspace.height;
    const [x, y] = toWorkspace(px, py, viewport());
    gate.pointer(x, y);
  });
  window.addEventListener("keydown", (ev) => {
    if (ev.key === "Control") gate.setModifier(true);
  });
  window.addEventListener("keyup", (ev) => {
    if (ev.key === "Control") gate.setModifier(false);
  });
  window.addEventListener("blur", () => gate.setModifier(false));

  reconnectBtn.addEventListener("click", () => {
    vs = setConnection(vs, "connecting");
    client.connect();
  });
  downloadBtn.addEventListener("click", () => {
    const blob = new Blob([statesToCsv(vs.states)], { type: "text/csv" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "session.csv";
    a.click();
    URL.revokeObjectURL(a.href);
  });

  const nelboCtx = nelboCanvas.getContext("2d")!;
  const congruenceCtx = congruenceCanvas.getContext("2d")!;
  const workspaceCtx = workspace.getContext("2d")!;

  function frame(): void {
    drawWorkspace(workspaceCtx, vs, viewport());
    drawChart(nelboCtx, vs.nelbo, nelboScale, {
      stroke: "#2d7daf", label: "negative bound",
    }, nelboCanvas.width, nelboCanvas.height);
    drawChart(congruenceCtx, vs.congruence, nelboScale, {
      stroke: "#1e5c9b", label: "P(congruence)", fixedRange: { lo: 0, hi: 1 },
    }, congruenceCanvas.width, congruenceCanvas.height);

    statusEl.textContent =
      `${vs.connection} | phase ${vs.phase} | t=${vs.lastT}` +
      (vs.hello ? ` / ${vs.hello.total_ticks}` : "");
    labelsEl.textContent =
      `robot: ${vs.robotLabel ?? "-"}  human: ${vs.humanLabel ?? "-"}` +
      (vs.humanActive ? "  [steering]" : "  (hold Ctrl to steer)");
    overlayEl.classList.toggle("hidden", vs.connection !== "closed");
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

start();
