/** Operator session state and the driver API the screens call into. */

import {
  COMMAND_VALUE,
  PoseKey,
  POSE_KEYS,
  Scale,
  TAG,
  WireFrame,
  clampAngle,
  clampGripper,
  clampScaled,
  describeError,
  encodeAngle,
  encodeGripper,
  encodeScaled,
  formatLine,
  makeFrame,
  parseLine,
  poseTag,
} from "./codec.js";
import { Transport } from "./transport.js";

export type Robot = "ur5" | "panda";
export type Mode = 1 | 2 | 3 | 4;
export type ConnectionStatus = "disconnected" | "connecting" | "connected";

export const JOINT_COUNT: Record<Robot, number> = { ur5: 6, panda: 7 };
export const MAX_JOINTS = 7;

export interface SwitchStates {
  start: boolean;
  stop: boolean;
  perceived: boolean;
  planned: boolean;
  grasped: boolean;
  placed: boolean;
}

export interface UiSessionState {
  connection: ConnectionStatus;
  robot: Robot | null;
  mode: Mode | null;
  /** Joint slider positions in degrees (panda uses all seven). */
  sliders: number[];
  /** Finger slider positions in millimetres: [left, right]. */
  fingers: [number, number];
  /** Mode-2 form fields, raw text as typed. */
  poseFields: Record<PoseKey, string>;
  /** Mode-3 tilt reading in degrees, clamped. */
  roll: number;
  armedJoint: number | null;
  switches: SwitchStates;
  rtf: number | null;
  lastError: string | null;
  lastErrorCode: number | null;
}

function freshSwitches(): SwitchStates {
  return { start: false, stop: false, perceived: false, planned: false, grasped: false, placed: false };
}

function freshPoseFields(): Record<PoseKey, string> {
  const fields = {} as Record<PoseKey, string>;
  for (const key of POSE_KEYS) fields[key] = "";
  return fields;
}

export function initialState(): UiSessionState {
  return {
    connection: "disconnected",
    robot: null,
    mode: null,
    sliders: new Array(MAX_JOINTS).fill(0),
    fingers: [0, 0],
    poseFields: freshPoseFields(),
    roll: 0,
    armedJoint: null,
    switches: freshSwitches(),
    rtf: null,
    lastError: null,
    lastErrorCode: null,
  };
}

export type TransportFactory = (url: string) => Transport;

export class UiSession {
  state: UiSessionState = initialState();
  /** Every line handed to the transport, for conformance checks. */
  readonly sent: string[] = [];

  private transport: Transport | null = null;
  private listeners: Array<() => void> = [];
  private sliderDirty: boolean[] = new Array(MAX_JOINTS).fill(false);
  private fingerDirty: [boolean, boolean] = [false, false];

  constructor(
    private readonly makeTransport: TransportFactory,
    public scale: Scale = 100,
  ) {}

  onChange(cb: () => void): void {
    this.listeners.push(cb);
  }

  private notify(): void {
    for (const cb of this.listeners) cb();
  }

  // ---- connection ------------------------------------------------------

  connect(host: string, port: number): void {
    if (this.transport) this.transport.close();
    this.state = initialState();
    this.state.connection = "connecting";
    const transport = this.makeTransport(`ws://${host}:${port}/`);
    this.transport = transport;
    transport.onOpen(() => {
      this.state.connection = "connected";
      this.notify();
    });
    transport.onLine((line) => this.handleLine(line));
    transport.onClose(() => this.handleClose());
    this.notify();
  }

  disconnect(): void {
    this.transport?.close();
  }

  private handleClose(): void {
    // A new connection starts a fresh bridge session, so robot and mode
    // must be chosen again: back to the connect screen, switches grey.
    this.transport = null;
    this.state.connection = "disconnected";
    this.state.robot = null;
    this.state.mode = null;
    this.state.armedJoint = null;
    this.state.switches = freshSwitches();
    this.notify();
  }

  /** Socket callback: updates state only, never emits frames. */
  private handleLine(line: string): void {
    let frame: WireFrame;
    try {
      frame = parseLine(line);
    } catch {
      return;
    }
    if (frame.tag === TAG.STATUS) {
      this.state.switches.perceived = (frame.value & 1) !== 0;
      this.state.switches.planned = (frame.value & 2) !== 0;
      this.state.switches.grasped = (frame.value & 4) !== 0;
      this.state.switches.placed = (frame.value & 8) !== 0;
    } else if (frame.tag === TAG.RTF) {
      this.state.rtf = frame.value / 100;
    } else if (frame.tag === TAG.ERROR) {
      this.state.lastError = describeError(frame.value);
      this.state.lastErrorCode = frame.value;
    }
    this.notify();
  }

  // ---- emission --------------------------------------------------------

  private emit(tag: number, value: number): void {
    if (!this.transport || this.state.connection !== "connected") {
      this.localError("not connected");
      return;
    }
    const line = formatLine(makeFrame(tag, value));
    this.sent.push(line.trimEnd());
    this.transport.send(line);
  }

  private localError(message: string): void {
    this.state.lastError = message;
    this.state.lastErrorCode = null;
    this.notify();
  }

  clearError(): void {
    this.state.lastError = null;
    this.state.lastErrorCode = null;
    this.notify();
  }

  // ---- selection -------------------------------------------------------

  selectRobot(robot: Robot): void {
    if (this.state.connection !== "connected") {
      this.localError("connect before selecting a robot");
      return;
    }
    this.emit(robot === "ur5" ? TAG.ROBOT_UR5 : TAG.ROBOT_PANDA, COMMAND_VALUE);
    this.state.robot = robot;
    this.state.armedJoint = null;
    this.sliderDirty.fill(false);
    this.fingerDirty = [false, false];
    this.notify();
  }

  selectMode(mode: Mode): void {
    if (this.state.connection !== "connected" || this.state.robot === null) {
      this.localError("select a robot before choosing a mode");
      return;
    }
    this.emit(TAG.MODE_BASE + mode, COMMAND_VALUE);
    this.state.mode = mode;
    this.state.armedJoint = null;
    this.notify();
  }

  jointCount(): number {
    return this.state.robot ? JOINT_COUNT[this.state.robot] : 0;
  }

  // ---- mode 1: sliders (also gripper sliders on modes 3 and 4) ----------

  /** Drag updates state only; the frame goes out on release. */
  setSlider(joint: number, degrees: number): void {
    if (!this.jointInRange(joint)) return;
    this.state.sliders[joint] = clampAngle(degrees);
    this.sliderDirty[joint] = true;
    this.notify();
  }

  releaseSlider(joint: number): void {
    if (!this.jointInRange(joint) || !this.sliderDirty[joint]) return;
    if (this.state.mode !== 1 && this.state.mode !== 3) {
      this.localError("joint sliders work in modes 1 and 3");
      return;
    }
    this.sliderDirty[joint] = false;
    const degrees = Math.round(this.state.sliders[joint] ?? 0);
    this.emit(TAG.JOINT_BASE + joint + 1, encodeAngle(degrees));
  }

  setFinger(side: 0 | 1, millimetres: number): void {
    this.state.fingers[side] = clampGripper(millimetres);
    this.fingerDirty[side] = true;
    this.notify();
  }

  releaseFinger(side: 0 | 1): void {
    if (!this.fingerDirty[side]) return;
    if (this.state.mode !== 1 && this.state.mode !== 3 && this.state.mode !== 4) {
      this.localError("finger sliders work in modes 1, 3, and 4");
      return;
    }
    this.fingerDirty[side] = false;
    const mm = Math.round(this.state.fingers[side]);
    this.emit(side === 0 ? TAG.FINGER_LEFT : TAG.FINGER_RIGHT, encodeGripper(mm));
  }

  private jointInRange(joint: number): boolean {
    const count = this.state.robot ? JOINT_COUNT[this.state.robot] : MAX_JOINTS;
    return Number.isInteger(joint) && joint >= 0 && joint < count;
  }

  // ---- mode 2: pose form -------------------------------------------------

  setPoseField(key: PoseKey, text: string): void {
    this.state.poseFields[key] = text;
    this.notify();
  }

  sendPoseField(key: PoseKey): void {
    if (this.state.mode !== 2) {
      this.localError("pose fields work in mode 2");
      return;
    }
    const text = this.state.poseFields[key].trim();
    const real = text === "" ? NaN : Number(text);
    if (!Number.isFinite(real)) {
      this.localError(`${key}: enter a number`);
      return;
    }
    this.emit(poseTag(key), encodeScaled(clampScaled(real, this.scale), this.scale));
  }

  /**
   * Always forwards the Confirm press; the bridge is the authority on
   * completeness and reachability, and its 9003 reply is shown as-is.
   */
  confirm(): void {
    if (this.state.mode !== 2) {
      this.localError("confirm works in mode 2");
      return;
    }
    this.emit(TAG.CONFIRM, COMMAND_VALUE);
  }

  // ---- mode 3: tilt ------------------------------------------------------

  armJoint(joint: number): void {
    if (this.state.mode !== 3) {
      this.localError("tilt control works in mode 3");
      return;
    }
    if (!this.jointInRange(joint)) return;
    this.state.armedJoint = joint;
    this.notify();
  }

  /** Live device-orientation (or fallback widget) reading, clamped. */
  updateRoll(degrees: number): void {
    this.state.roll = clampAngle(degrees);
    this.notify();
  }

  sendRoll(): void {
    if (this.state.mode !== 3 || this.state.armedJoint === null) return;
    const degrees = Math.round(this.state.roll);
    this.emit(TAG.JOINT_BASE + this.state.armedJoint + 1, encodeAngle(degrees));
  }

  // ---- mode 4: autonomy ---------------------------------------------------

  start(): void {
    if (this.state.mode !== 4) {
      this.localError("start works in mode 4");
      return;
    }
    this.emit(TAG.START, COMMAND_VALUE);
    this.state.switches.start = true;
    this.state.switches.stop = false;
    this.notify();
  }

  stop(): void {
    if (this.state.mode !== 4) {
      this.localError("stop works in mode 4");
      return;
    }
    this.emit(TAG.STOP, COMMAND_VALUE);
    this.state.switches.stop = true;
    this.state.switches.start = false;
    this.notify();
  }
}
