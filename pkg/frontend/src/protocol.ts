/**
 * Typed frames for the `coservo.ws/1` wire protocol.
 *
 * The field lists here mirror PROTOCOL.md in the repository root, which is
 * the frozen contract with the simulation service. Every schema is strict:
 * a frame carrying a field that the document does not mention fails to
 * parse, which is exactly what we want from a versioned protocol (an
 * unknown field means the server speaks a newer dialect and the UI should
 * say so rather than guess). The schema test suite cross-checks these key
 * sets against the document itself.
 */
import { z } from "zod";

export const PROTOCOL_VERSION = "coservo.ws/1";

const vec2 = z.tuple([z.number(), z.number()]);
const vec3 = z.tuple([z.number(), z.number(), z.number()]);
const vec4 = z.tuple([z.number(), z.number(), z.number(), z.number()]);

/** Client-chosen sequence tag, echoed back verbatim by the server. */
const seq = z.union([z.number(), z.string(), z.null()]);

// ---------------------------------------------------------------- server

export const helloSchema = z
  .object({
    type: z.literal("hello"),
    protocol: z.string(),
    role: z.enum(["expert", "viewer"]),
    header: z
      .object({
        name: z.string(),
        dt: z.number(),
        seed: z.number().int(),
        n_dof: z.number().int(),
        task_dim: z.number().int(),
        timeout: z.number(),
        grasp_tol: z.number(),
        n_tasks: z.number().int(),
      })
      .strict(),
    robot: z
      .object({
        n_dof: z.number().int(),
        task_dim: z.number().int(),
        joint_limits: z.array(vec2),
        axes: z.array(vec3),
        offsets: z.array(vec3),
        ee_offset: vec3,
      })
      .strict(),
    camera: z
      .object({
        width: z.number(),
        height: z.number(),
        fx: z.number(),
        fy: z.number(),
        cx: z.number(),
        cy: z.number(),
      })
      .strict(),
    vision: z.object({ b: vec2, k_v: z.number() }).strict(),
    realtime_factor: z.number(),
    paused: z.boolean(),
    step: z.number().int(),
  })
  .strict();

export const stateSchema = z
  .object({
    type: z.literal("state"),
    step: z.number().int(),
    t: z.number(),
    phase: z.string(),
    cycle: z.number().int(),
    status: z.string().nullable(),
    paused: z.boolean(),
    q: z.array(z.number()),
    joints: z.array(vec3),
    ee_t: vec3,
    ee_quat: vec4,
    px: vec2.nullable(),
    target_px: vec2.nullable(),
    pixel_error: z.number().nullable(),
    box: z.object({ center: vec3, half_sizes: vec3 }).strict(),
    object: vec3.nullable(),
    drag: z
      .object({ joint_index: z.number().int(), drag: vec3 })
      .strict()
      .nullable(),
    // Step-record diagnostics: present on frames emitted by a simulation
    // step, absent from the post-hello snapshot.
    u: z.array(z.number()).optional(),
    xi_q_norm: z.number().optional(),
    xi_r_norm: z.number().optional(),
    xi_x_norm: z.number().optional(),
    residual_norm: z.number().optional(),
    V: z.number().optional(),
    mode: z.string().optional(),
    effort: z.boolean().optional(),
  })
  .strict();

export const ackSchema = z
  .object({
    type: z.literal("ack"),
    seq,
    cmd: z.enum(["drag", "region", "phase_ctl"]),
    applied_step: z.number().int(),
  })
  .strict();

export const errorSchema = z
  .object({
    type: z.literal("error"),
    seq,
    message: z.string(),
  })
  .strict();

export const summarySchema = z
  .object({
    type: z.literal("summary"),
    status: z.string(),
    detail: z.string(),
    t_final: z.number(),
    steps: z.number().int(),
    phase: z.string(),
    cycles_completed: z.number().int(),
  })
  .strict();

export const serverFrameSchema = z.discriminatedUnion("type", [
  helloSchema,
  stateSchema,
  ackSchema,
  errorSchema,
  summarySchema,
]);

export type HelloFrame = z.infer<typeof helloSchema>;
export type StateFrame = z.infer<typeof stateSchema>;
export type AckFrame = z.infer<typeof ackSchema>;
export type ErrorFrame = z.infer<typeof errorSchema>;
export type SummaryFrame = z.infer<typeof summarySchema>;
export type ServerFrame = z.infer<typeof serverFrameSchema>;

/**
 * Parse one incoming message. Throws (ZodError or SyntaxError) on anything
 * that is not a well-formed frame of a known type.
 */
export function parseServerFrame(text: string): ServerFrame {
  return serverFrameSchema.parse(JSON.parse(text));
}

// ---------------------------------------------------------------- client

export const dragFrameSchema = z
  .object({
    type: z.literal("drag"),
    seq: z.number().optional(),
    joint_index: z.number().int().min(1).optional(),
    drag: vec3.nullable(),
  })
  .strict()
  .refine((f) => f.drag === null || f.joint_index !== undefined, {
    message: "a non-null drag needs a joint_index",
  });

export const regionFrameSchema = z
  .object({
    type: z.literal("region"),
    seq: z.number().optional(),
    center: vec3,
    half_sizes: z.tuple([
      z.number().positive(),
      z.number().positive(),
      z.number().positive(),
    ]),
  })
  .strict();

export const phaseCtlFrameSchema = z
  .object({
    type: z.literal("phase_ctl"),
    seq: z.number().optional(),
    action: z.enum(["pause", "resume", "speed", "step"]),
    value: z.number().min(0).optional(),
  })
  .strict()
  .refine((f) => f.action !== "speed" || f.value !== undefined, {
    message: "speed needs a value",
  });

export type DragFrame = z.infer<typeof dragFrameSchema>;
export type RegionFrame = z.infer<typeof regionFrameSchema>;
export type PhaseCtlFrame = z.infer<typeof phaseCtlFrameSchema>;
export type ClientFrame = DragFrame | RegionFrame | PhaseCtlFrame;

const clientSchemas = {
  drag: dragFrameSchema,
  region: regionFrameSchema,
  phase_ctl: phaseCtlFrameSchema,
} as const;

/**
 * Serialize an outgoing command, validating it first so a UI bug cannot
 * put an off-contract frame on the wire.
 */
export function encodeClientFrame(frame: ClientFrame): string {
  const schema = clientSchemas[frame.type];
  if (!schema) throw new Error(`unknown client frame type ${frame["type"]}`);
  return JSON.stringify(schema.parse(frame));
}
