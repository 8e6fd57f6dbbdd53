// Wire message types and validation against the schema shared with the
// teleoperation service. Every outbound message must pass validateMessage
// before it is sent; inbound state is dropped unless it validates.

import Ajv, { type ValidateFunction } from "ajv";
import schema from "../schema/wire_messages.schema.json";
import type { Quat, Vec3 } from "./vec.js";

export interface CommandMessage {
  v: 1;
  type: "command";
  seq: number;
  omega_h_s: Vec3;
}

export interface GrabMessage {
  v: 1;
  type: "grab";
  r0_quat: Quat;
}

export interface PoseMessage {
  v: 1;
  type: "pose";
  rt_quat: Quat;
}

export interface PressStartMessage {
  v: 1;
  type: "press_start";
}

export interface SetReferenceMessage {
  v: 1;
  type: "set_reference";
  d_r: Vec3;
}

export interface StateMessage {
  v: 1;
  type: "state";
  t: number;
  d_l: Vec3;
  d_r: Vec3;
  d_bar: Vec3;
  R_l_quat: Quat;
  bodies_quat: Quat[];
  error_norm: number;
  trial_id: number;
}

export type ClientMessage =
  | CommandMessage
  | GrabMessage
  | PoseMessage
  | PressStartMessage
  | SetReferenceMessage;

export type WireMessage = ClientMessage | StateMessage;

const ajv = new Ajv({ allErrors: false });
const validator: ValidateFunction = ajv.compile(schema as object);

export function validateMessage(msg: unknown): msg is WireMessage {
  return validator(msg) === true;
}

export function assertValidMessage(msg: unknown): WireMessage {
  if (!validateMessage(msg)) {
    throw new Error(`message failed schema validation: ${JSON.stringify(msg)}`);
  }
  return msg;
}
