/** DOM construction and event wiring for the four operator screens. */

import { POSE_KEYS, PoseKey, Scale } from "./codec.js";
import { MAX_JOINTS, Mode, Robot, UiSession } from "./session.js";

const POSE_LABELS: Record<PoseKey, string> = {
  x: "x (m)",
  y: "y (m)",
  z: "z (m)",
  xor: "Xor",
  yor: "Yor",
  zor: "Zor",
  w: "W",
};

const SWITCH_NAMES = ["start", "stop", "perceived", "planned", "grasped", "placed"] as const;

function jointSliderRow(prefix: string, joint: number): string {
  return `
    <label class="slider-row" id="${prefix}-row-${joint}">
      joint ${joint + 1}
      <input type="range" id="${prefix}-${joint}" min="-180" max="180" step="1" value="0">
      <output id="${prefix}-value-${joint}">0</output>
    </label>`;
}

function fingerSliderRow(id: string, side: 0 | 1): string {
  return `
    <label class="slider-row">
      ${side === 0 ? "left" : "right"} finger (mm)
      <input type="range" id="${id}" min="0" max="40" step="1" value="0">
      <output id="${id}-value">0</output>
    </label>`;
}

function template(): string {
  const jointSliders = Array.from({ length: MAX_JOINTS }, (_, j) => jointSliderRow("joint-slider", j)).join("");
  const armButtons = Array.from(
    { length: MAX_JOINTS },
    (_, j) => `<button id="arm-joint-${j}" class="arm-row" data-row="${j}">arm joint ${j + 1}</button>`,
  ).join("");
  const poseRows = POSE_KEYS.map(
    (key) => `
    <div class="pose-row">
      <label>${POSE_LABELS[key]} <input type="text" id="pose-${key}"></label>
      <button id="send-${key}">send</button>
    </div>`,
  ).join("");
  const switches = SWITCH_NAMES.map(
    (name) => `<div class="switch off" id="switch-${name}">${name}</div>`,
  ).join("");
  return `
  <section id="screen-connect">
    <h2>Connect</h2>
    <label>host <input type="text" id="host" value="127.0.0.1"></label>
    <label>port <input type="text" id="port" value="8700"></label>
    <label>pose scale
      <select id="scale"><option value="100">100</option><option value="1000">1000</option></select>
    </label>
    <button id="connect-btn">Connect</button>
    <button id="disconnect-btn">Disconnect</button>
    <span id="connection-status">disconnected</span>
  </section>

  <section id="screen-select">
    <h2>Robot and mode</h2>
    <button id="robot-ur5">UR5</button>
    <button id="robot-panda">Panda</button>
    <button id="mode-1">Mode 1: joints</button>
    <button id="mode-2">Mode 2: pose</button>
    <button id="mode-3">Mode 3: tilt</button>
    <button id="mode-4">Mode 4: autonomy</button>
  </section>

  <section id="screen-mode1">
    <h2>Mode 1 — joint sliders</h2>
    ${jointSliders}
    ${fingerSliderRow("finger-slider-0", 0)}
    ${fingerSliderRow("finger-slider-1", 1)}
  </section>

  <section id="screen-mode2">
    <h2>Mode 2 — end-effector pose</h2>
    ${poseRows}
    <button id="confirm-btn">Confirm</button>
  </section>

  <section id="screen-mode3">
    <h2>Mode 3 — tilt control</h2>
    <div id="arm-buttons">${armButtons}</div>
    <div>roll: <output id="roll-display">0.0</output>&deg;</div>
    <label class="slider-row">
      tilt fallback
      <input type="range" id="tilt-input" min="-200" max="200" step="0.1" value="0">
    </label>
    <button id="send-roll-btn" disabled>Send roll to joint</button>
    ${fingerSliderRow("m3-finger-slider-0", 0)}
    ${fingerSliderRow("m3-finger-slider-1", 1)}
  </section>

  <section id="screen-mode4">
    <h2>Mode 4 — pick and place</h2>
    <button id="start-btn">Start</button>
    <button id="stop-btn">Stop</button>
    <div id="switches">${switches}</div>
  </section>

  <footer>
    <span id="error-display"></span>
    <span id="rtf-display">rtf: n/a</span>
  </footer>`;
}

function get<T extends HTMLElement>(root: HTMLElement, id: string): T {
  const el = root.querySelector<T>(`#${id}`);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

export function buildUi(root: HTMLElement, session: UiSession): void {
  root.innerHTML = template();

  // ---- connect screen --------------------------------------------------
  const host = get<HTMLInputElement>(root, "host");
  const port = get<HTMLInputElement>(root, "port");
  const scale = get<HTMLSelectElement>(root, "scale");
  get<HTMLButtonElement>(root, "connect-btn").addEventListener("click", () => {
    session.scale = Number(scale.value) === 1000 ? 1000 : 100;
    session.connect(host.value.trim(), Number(port.value));
  });
  get<HTMLButtonElement>(root, "disconnect-btn").addEventListener("click", () => session.disconnect());

  // ---- robot and mode selection -----------------------------------------
  for (const robot of ["ur5", "panda"] as Robot[]) {
    get<HTMLButtonElement>(root, `robot-${robot}`).addEventListener("click", () => session.selectRobot(robot));
  }
  for (const mode of [1, 2, 3, 4] as Mode[]) {
    get<HTMLButtonElement>(root, `mode-${mode}`).addEventListener("click", () => session.selectMode(mode));
  }

  // ---- mode 1 ------------------------------------------------------------
  for (let j = 0; j < MAX_JOINTS; j += 1) {
    const slider = get<HTMLInputElement>(root, `joint-slider-${j}`);
    slider.addEventListener("input", () => session.setSlider(j, Number(slider.value)));
    slider.addEventListener("change", () => {
      session.setSlider(j, Number(slider.value));
      session.releaseSlider(j);
    });
  }
  const wireFinger = (id: string, side: 0 | 1) => {
    const slider = get<HTMLInputElement>(root, id);
    slider.addEventListener("input", () => session.setFinger(side, Number(slider.value)));
    slider.addEventListener("change", () => {
      session.setFinger(side, Number(slider.value));
      session.releaseFinger(side);
    });
  };
  wireFinger("finger-slider-0", 0);
  wireFinger("finger-slider-1", 1);

  // ---- mode 2 ------------------------------------------------------------
  for (const key of POSE_KEYS) {
    const field = get<HTMLInputElement>(root, `pose-${key}`);
    field.addEventListener("input", () => session.setPoseField(key, field.value));
    get<HTMLButtonElement>(root, `send-${key}`).addEventListener("click", () => {
      session.setPoseField(key, field.value);
      session.sendPoseField(key);
    });
  }
  get<HTMLButtonElement>(root, "confirm-btn").addEventListener("click", () => session.confirm());

  // ---- mode 3 ------------------------------------------------------------
  for (let j = 0; j < MAX_JOINTS; j += 1) {
    get<HTMLButtonElement>(root, `arm-joint-${j}`).addEventListener("click", () => session.armJoint(j));
  }
  const tilt = get<HTMLInputElement>(root, "tilt-input");
  tilt.addEventListener("input", () => session.updateRoll(Number(tilt.value)));
  window.addEventListener("deviceorientation", (event) => {
    const roll = (event as DeviceOrientationEvent).gamma;
    if (roll !== null && roll !== undefined) session.updateRoll(roll);
  });
  get<HTMLButtonElement>(root, "send-roll-btn").addEventListener("click", () => session.sendRoll());
  wireFinger("m3-finger-slider-0", 0);
  wireFinger("m3-finger-slider-1", 1);

  // ---- mode 4 ------------------------------------------------------------
  get<HTMLButtonElement>(root, "start-btn").addEventListener("click", () => session.start());
  get<HTMLButtonElement>(root, "stop-btn").addEventListener("click", () => session.stop());

  // ---- rendering -----------------------------------------------------------
  const screens: Record<string, HTMLElement> = {
    connect: get(root, "screen-connect"),
    select: get(root, "screen-select"),
    mode1: get(root, "screen-mode1"),
    mode2: get(root, "screen-mode2"),
    mode3: get(root, "screen-mode3"),
    mode4: get(root, "screen-mode4"),
  };

  const render = (): void => {
    const s = session.state;
    const connected = s.connection === "connected";

    // Mode screens stay unreachable until connected and a robot is chosen.
    screens["connect"]!.hidden = connected;
    screens["select"]!.hidden = !connected;
    for (const mode of [1, 2, 3, 4]) {
      screens[`mode${mode}`]!.hidden = !(connected && s.robot !== null && s.mode === mode);
      get<HTMLButtonElement>(root, `mode-${mode}`).disabled = s.robot === null;
      get<HTMLButtonElement>(root, `mode-${mode}`).classList.toggle("active", s.mode === mode);
    }
    get<HTMLButtonElement>(root, "robot-ur5").classList.toggle("active", s.robot === "ur5");
    get<HTMLButtonElement>(root, "robot-panda").classList.toggle("active", s.robot === "panda");
    get(root, "connection-status").textContent = s.connection;

    const joints = session.jointCount() || MAX_JOINTS;
    for (let j = 0; j < MAX_JOINTS; j += 1) {
      get(root, `joint-slider-row-${j}`).hidden = j >= joints;
      get(root, `arm-joint-${j}`).hidden = j >= joints;
      get(root, `joint-slider-value-${j}`).textContent = String(Math.round(s.sliders[j] ?? 0));
      get(root, `arm-joint-${j}`).classList.toggle("armed", s.armedJoint === j);
    }
    get(root, "finger-slider-0-value").textContent = String(Math.round(s.fingers[0]));
    get(root, "finger-slider-1-value").textContent = String(Math.round(s.fingers[1]));
    get(root, "m3-finger-slider-0-value").textContent = String(Math.round(s.fingers[0]));
    get(root, "m3-finger-slider-1-value").textContent = String(Math.round(s.fingers[1]));

    get(root, "roll-display").textContent = s.roll.toFixed(1);
    get<HTMLButtonElement>(root, "send-roll-btn").disabled = s.armedJoint === null;

    for (const name of SWITCH_NAMES) {
      const el = get(root, `switch-${name}`);
      const on = s.switches[name];
      el.classList.toggle("on", connected && on);
      el.classList.toggle("off", connected && !on);
      el.classList.toggle("grey", !connected);
    }

    get(root, "error-display").textContent = s.lastError ?? "";
    get(root, "rtf-display").textContent = s.rtf === null ? "rtf: n/a" : `rtf: ${s.rtf.toFixed(2)}`;
  };

  session.onChange(render);
  render();
}
