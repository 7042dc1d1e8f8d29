/** Browser shell: websocket wiring, canvas rendering, keyboard teleop.
 *
 * Everything shown (mode badge, recording dot, match panel) reflects what
 * the server last echoed, never what was requested — a click that the
 * server rejects (e.g. autonomous without a model) visibly does nothing.
 */

import { Command, StateFrame, commandMessage, parseServerFrame, recordMessage, setModeMessage } from "./protocol.js";
import { decodePpmBase64 } from "./ppm.js";
import { RateLimiter, commandFromKeys } from "./input.js";

const SEND_INTERVAL_MS = 50;
const IR_MAX_RANGE = 3.0;

function must<T extends HTMLElement>(doc: Document, id: string): T {
  const el = doc.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

export function startApp(doc: Document): void {
  const camera = must<HTMLCanvasElement>(doc, "camera");
  const ir = must<HTMLCanvasElement>(doc, "ir");
  const statusTick = must<HTMLElement>(doc, "status-tick");
  const statusMode = must<HTMLElement>(doc, "status-mode");
  const statusRec = must<HTMLElement>(doc, "status-rec");
  const statusPose = must<HTMLElement>(doc, "status-pose");
  const statusLink = must<HTMLElement>(doc, "status-link");
  const matchPanel = must<HTMLElement>(doc, "match-panel");
  const modeButton = must<HTMLButtonElement>(doc, "btn-mode");
  const recordButton = must<HTMLButtonElement>(doc, "btn-record");

  let socket: WebSocket | null = null;
  let lastTick = -1;
  let lastFrame: StateFrame | null = null;
  const heldKeys = new Set<string>();
  let lastCommandJson = "";
  const limiter = new RateLimiter(SEND_INTERVAL_MS, (message) => {
    if (socket && socket.readyState === WebSocket.OPEN) socket.send(message);
  });

  function renderCamera(frame: StateFrame): void {
    const raster = decodePpmBase64(frame.image_ppm_b64);
    if (camera.width !== raster.width || camera.height !== raster.height) {
      camera.width = raster.width;
      camera.height = raster.height;
    }
    const ctx = camera.getContext("2d");
    if (ctx) ctx.putImageData(new ImageData(raster.rgba, raster.width, raster.height), 0, 0);
  }

  function renderIr(distances: number[]): void {
    const ctx = ir.getContext("2d");
    if (!ctx) return;
    const cx = ir.width / 2;
    const cy = ir.height / 2;
    const scale = (Math.min(cx, cy) - 8) / IR_MAX_RANGE;
    ctx.clearRect(0, 0, ir.width, ir.height);

    ctx.strokeStyle = "#2a4a2a";
    for (let ring = 1; ring <= 3; ring++) {
      ctx.beginPath();
      ctx.arc(cx, cy, ring * scale, 0, 2 * Math.PI);
      ctx.stroke();
    }
    // robot faces up; sensor k sits at k*45° counter-clockwise from forward
    ctx.strokeStyle = "#7fdc7f";
    ctx.fillStyle = "rgba(127, 220, 127, 0.15)";
    ctx.beginPath();
    distances.forEach((d, k) => {
      const theta = (k * Math.PI) / 4;
      const x = cx - Math.sin(theta) * d * scale;
      const y = cy - Math.cos(theta) * d * scale;
      if (k === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.closePath();
    ctx.fill();
    ctx.stroke();
    ctx.fillStyle = "#e8e8e8";
    ctx.fillRect(cx - 2, cy - 2, 4, 4);
  }

  function renderMatch(frame: StateFrame): void {
    if (frame.mode !== "autonomous" || frame.match === null) {
      matchPanel.hidden = true;
      matchPanel.textContent = "";
      return;
    }
    const m = frame.match;
    const scores = Object.entries(m.scores)
      .map(([name, value]) => `${name}=${value.toFixed(4)}`)
      .join("  ");
    matchPanel.hidden = false;
    matchPanel.textContent =
      `match #${m.index}  ->  linear ${m.command.linear.toFixed(2)}, ` +
      `angular ${m.command.angular.toFixed(2)}, fork ${m.command.fork.toFixed(2)}\n${scores}`;
  }

  function renderStatus(frame: StateFrame): void {
    statusTick.textContent = `tick ${frame.tick}`;
    statusMode.textContent = frame.mode;
    statusMode.className = frame.mode === "autonomous" ? "badge auto" : "badge";
    statusRec.textContent = frame.recording ? "REC" : "idle";
    statusRec.className = frame.recording ? "badge rec" : "badge";
    const p = frame.pose;
    statusPose.textContent = `x ${p.x.toFixed(2)}  y ${p.y.toFixed(2)}  yaw ${p.yaw.toFixed(2)}`;
    modeButton.textContent = frame.mode === "autonomous" ? "go manual" : "go autonomous";
    recordButton.textContent = frame.recording ? "stop recording" : "start recording";
  }

  function onFrame(frame: StateFrame): void {
    if (frame.tick <= lastTick) return; // drop stale or duplicated frames
    lastTick = frame.tick;
    lastFrame = frame;
    renderCamera(frame);
    renderIr(frame.distances);
    renderMatch(frame);
    renderStatus(frame);
  }

  function connect(): void {
    const url = `ws://${doc.location.host}/ws`;
    socket = new WebSocket(url);
    socket.onopen = () => {
      statusLink.textContent = "connected";
      statusLink.className = "badge live";
    };
    socket.onmessage = (event) => {
      try {
        const frame = parseServerFrame(String(event.data));
        if (frame.type === "state") onFrame(frame);
        else statusLink.textContent = `server error: ${frame.error}`;
      } catch (e) {
        console.warn("dropping frame:", e);
      }
    };
    socket.onclose = () => {
      statusLink.textContent = "disconnected — retrying";
      statusLink.className = "badge";
      setTimeout(connect, 1000);
    };
  }

  function pushCommand(): void {
    const command: Command = commandFromKeys(heldKeys);
    const message = commandMessage(command);
    if (message === lastCommandJson) return; // only state changes go out
    lastCommandJson = message;
    limiter.offer(message);
  }

  doc.addEventListener("keydown", (event) => {
    const key = event.key.toLowerCase();
    heldKeys.add(key);
    pushCommand();
  });
  doc.addEventListener("keyup", (event) => {
    heldKeys.delete(event.key.toLowerCase());
    pushCommand();
  });

  modeButton.addEventListener("click", () => {
    const wantAutonomous = lastFrame === null || lastFrame.mode !== "autonomous";
    limiter.offer(setModeMessage(wantAutonomous ? "autonomous" : "manual"));
  });
  recordButton.addEventListener("click", () => {
    const recording = lastFrame !== null && lastFrame.recording;
    limiter.offer(recordMessage(recording ? "stop" : "start"));
  });

  connect();
}

if (typeof document !== "undefined" && document.getElementById("camera")) {
  startApp(document);
}
