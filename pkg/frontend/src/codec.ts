/** Wire codec: tagged 16-bit values, one ASCII line per frame. */

export const TAG = {
  ROBOT_UR5: 5000,
  ROBOT_PANDA: 5001,
  MODE_BASE: 4000, // mode m selects with tag 4000 + m
  JOINT_BASE: 3000, // joint j (1-based) uses tag 3000 + j
  FINGER_LEFT: 3101,
  FINGER_RIGHT: 3102,
  POSE_BASE: 2000, // x y z qx qy qz qw = 2001..2007
  CONFIRM: 2008,
  START: 1001,
  STOP: 1002,
  STATUS: 9001,
  RTF: 9002,
  ERROR: 9003,
  ECHO: 9999,
} as const;

export const POSE_KEYS = ["x", "y", "z", "xor", "yor", "zor", "w"] as const;
export type PoseKey = (typeof POSE_KEYS)[number];

export function poseTag(key: PoseKey): number {
  return TAG.POSE_BASE + 1 + POSE_KEYS.indexOf(key);
}

const VALID_TAGS: ReadonlySet<number> = new Set([
  TAG.ROBOT_UR5,
  TAG.ROBOT_PANDA,
  4001,
  4002,
  4003,
  4004,
  3001,
  3002,
  3003,
  3004,
  3005,
  3006,
  3007,
  TAG.FINGER_LEFT,
  TAG.FINGER_RIGHT,
  2001,
  2002,
  2003,
  2004,
  2005,
  2006,
  2007,
  TAG.CONFIRM,
  TAG.START,
  TAG.STOP,
  TAG.STATUS,
  TAG.RTF,
  TAG.ERROR,
  TAG.ECHO,
]);

export const COMMAND_VALUE = 1;
export const VALUE_MAX = 65535;
const ANGLE_OFFSET = 1000;

export class CodecError extends Error {}

/** Integer degrees in [-180, 180]; negatives fold to magnitude + 1000. */
export function encodeAngle(degrees: number): number {
  if (!Number.isInteger(degrees) || degrees < -180 || degrees > 180) {
    throw new CodecError(`angle ${degrees} outside [-180, 180]`);
  }
  return degrees < 0 ? -degrees + ANGLE_OFFSET : degrees;
}

export function decodeAngle(value: number): number {
  if (value >= 0 && value <= 180) return value;
  if (value >= ANGLE_OFFSET + 1 && value <= ANGLE_OFFSET + 180) {
    return -(value - ANGLE_OFFSET);
  }
  throw new CodecError(`value ${value} is not an encoded angle`);
}

/** Clamp a slider reading into the encodable angle range. */
export function clampAngle(degrees: number): number {
  return Math.min(180, Math.max(-180, degrees));
}

export type Scale = 100 | 1000;

/** Fixed point at `scale` counts per unit; negatives add 10 x scale. */
export function encodeScaled(real: number, scale: Scale): number {
  if (!Number.isFinite(real)) throw new CodecError(`cannot encode ${real}`);
  const magnitude = Math.round(Math.abs(real) * scale);
  const offset = 10 * scale;
  if (magnitude >= offset) {
    throw new CodecError(`${real} exceeds the representable range at scale ${scale}`);
  }
  return real < 0 ? magnitude + offset : magnitude;
}

export function decodeScaled(value: number, scale: Scale): number {
  const offset = 10 * scale;
  if (value >= 0 && value < offset) return value / scale;
  if (value >= offset && value < 2 * offset) return -(value - offset) / scale;
  throw new CodecError(`value ${value} is not a scaled real at scale ${scale}`);
}

/** Clamp a typed real into the encodable fixed-point range. */
export function clampScaled(real: number, scale: Scale): number {
  const bound = (10 * scale - 1) / scale;
  return Math.min(bound, Math.max(-bound, real));
}

/** Finger openings ride as plain millimetres, 0..40. */
export function encodeGripper(millimetres: number): number {
  if (!Number.isInteger(millimetres) || millimetres < 0 || millimetres > 40) {
    throw new CodecError(`gripper opening ${millimetres} outside [0, 40]`);
  }
  return millimetres;
}

export function clampGripper(millimetres: number): number {
  return Math.min(40, Math.max(0, millimetres));
}

export interface WireFrame {
  tag: number;
  value: number;
}

export function makeFrame(tag: number, value: number): WireFrame {
  if (!VALID_TAGS.has(tag)) throw new CodecError(`unknown tag ${tag}`);
  if (!Number.isInteger(value) || value < 0 || value > VALUE_MAX) {
    throw new CodecError(`value ${value} does not fit 16 bits`);
  }
  return { tag, value };
}

export function formatLine(frame: WireFrame): string {
  return `${frame.tag} ${frame.value}\n`;
}

export function parseLine(line: string): WireFrame {
  const fields = line.trim().split(/\s+/);
  if (fields.length !== 2) throw new CodecError(`malformed line ${JSON.stringify(line)}`);
  const tag = Number(fields[0]);
  const value = Number(fields[1]);
  if (!Number.isInteger(tag) || !Number.isInteger(value)) {
    throw new CodecError(`malformed line ${JSON.stringify(line)}`);
  }
  return makeFrame(tag, value);
}

/** Error codes the bridge reports via tag 9003. */
export const ERROR_TEXT: Record<number, string> = {
  1: "malformed frame",
  2: "select a robot first",
  3: "select a mode first",
  4: "not allowed in the active mode",
  5: "no such joint on this robot",
  6: "pose is incomplete, send all seven components",
  7: "pose is unreachable",
  8: "value out of range",
  9: "operators may not send telemetry tags",
};

export function describeError(code: number): string {
  return ERROR_TEXT[code] ?? `bridge error ${code}`;
}
