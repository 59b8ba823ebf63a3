import { connectSceneStream } from "./api.js";
import { ChatLog, highlightsFor, postQueryHttp } from "./chat.js";
import { drawFrame } from "./render.js";
import type { Scene } from "./types.js";
import { FrameBuffer, avIds, pickEgo } from "./viewmodel.js";

const canvas = document.querySelector<HTMLCanvasElement>("#map")!;
const banner = document.querySelector<HTMLDivElement>("#banner")!;
const egoSelect = document.querySelector<HTMLSelectElement>("#ego")!;
const sceneInfo = document.querySelector<HTMLSpanElement>("#scene-info")!;
const chatList = document.querySelector<HTMLDivElement>("#chat")!;
const form = document.querySelector<HTMLFormElement>("#ask-form")!;
const input = document.querySelector<HTMLInputElement>("#question")!;
const sendButton = document.querySelector<HTMLButtonElement>("#send")!;

const buffer = new FrameBuffer();
const chat = new ChatLog();
let currentScene: Scene | null = null;
let egoId: string | null = null;

connectSceneStream(
  "../stream",
  (scene) => buffer.push(scene),
  (status) => {
    banner.textContent = status === "live" ? "" : `stream ${status}...`;
    banner.style.display = status === "live" ? "none" : "block";
  },
);

function syncEgoOptions(scene: Scene): void {
  const avs = avIds(scene);
  const existing = Array.from(egoSelect.options).map((o) => o.value);
  if (JSON.stringify(avs) !== JSON.stringify(existing)) {
    egoSelect.innerHTML = "";
    for (const id of avs) {
      const option = document.createElement("option");
      option.value = id;
      option.textContent = id;
      egoSelect.appendChild(option);
    }
  }
  egoId = pickEgo(scene, egoId);
  if (egoId !== null) {
    egoSelect.value = egoId;
  }
}

egoSelect.addEventListener("change", () => {
  egoId = egoSelect.value || null;
});

input.addEventListener("input", () => {
  sendButton.disabled = input.value.trim().length === 0;
});
sendButton.disabled = true;

function frame(): void {
  const scene = buffer.take();
  if (scene !== null) {
    currentScene = scene;
    syncEgoOptions(scene);
    sceneInfo.textContent = `scene ${scene.scene_id} | t=${scene.ts.toFixed(1)}s | ${scene.objects.length} vehicles`;
  }
  if (currentScene !== null) {
    const ctx = canvas.getContext("2d")!;
    drawFrame(ctx, currentScene, egoId, highlightsFor(chat.lastAnswered()), canvas.width, canvas.height);
  }
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);

function renderChat(): void {
  chatList.innerHTML = "";
  for (const entry of chat.entries) {
    const div = document.createElement("div");
    div.className = `entry ${entry.status}`;
    const title = document.createElement("div");
    title.className = "q";
    title.textContent = entry.question;
    div.appendChild(title);
    if (entry.status === "pending") {
      div.appendChild(textLine("...", "pending"));
    } else if (entry.status === "error") {
      div.appendChild(textLine(`failed at ${entry.errorStage ?? "request"}: ${entry.errorDetail}`, "error-line"));
    } else if (entry.result) {
      const r = entry.result;
      div.appendChild(textLine(`task: ${r.task_name} (${r.task})  |  scene ${r.scene_id}, ego ${r.ego_id}`, "meta"));
      div.appendChild(
        textLine(
          `params: ${JSON.stringify(r.params)}`,
          "meta",
        ),
      );
      div.appendChild(textLine(`numeric: ${JSON.stringify(r.numeric.values)}  matched: [${r.numeric.matched_ids.join(", ")}]`, "numeric"));
      div.appendChild(textLine(r.answer, "answer"));
      div.appendChild(latencyBars(r.timings_ms));
    }
    chatList.appendChild(div);
  }
  chatList.scrollTop = chatList.scrollHeight;
}

function textLine(text: string, cls: string): HTMLDivElement {
  const line = document.createElement("div");
  line.className = cls;
  line.textContent = text;
  return line;
}

function latencyBars(timings: Record<string, number>): HTMLDivElement {
  const wrap = document.createElement("div");
  wrap.className = "latency";
  const total = Object.values(timings).reduce((a, b) => a + b, 0) || 1;
  for (const [stage, ms] of Object.entries(timings)) {
    const row = document.createElement("div");
    row.className = "latency-row";
    const label = document.createElement("span");
    label.textContent = `${stage} ${ms.toFixed(1)} ms`;
    const bar = document.createElement("div");
    bar.className = "bar";
    bar.style.width = `${Math.max(2, (100 * ms) / total)}%`;
    row.appendChild(label);
    row.appendChild(bar);
    wrap.appendChild(row);
  }
  return wrap;
}

form.addEventListener("submit", (event) => {
  event.preventDefault();
  const question = input.value.trim();
  if (question.length === 0 || egoId === null) {
    return;
  }
  input.value = "";
  sendButton.disabled = true;
  const pinnedScene = currentScene ? currentScene.scene_id : null;
  void chat
    .submit(question, egoId, pinnedScene, (body) => postQueryHttp("..", body))
    .then(renderChat);
  renderChat();
});
