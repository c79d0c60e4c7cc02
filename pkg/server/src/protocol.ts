/**
 * Protocol v1 request handling: newline-delimited JSON, lockstep, replies
 * correlated by id. Malformed requests and unknown ops get ok:false replies
 * and leave the connection up; only transport EOF ends a session.
 */

import {
  MAX_AMPLITUDE,
  SyntheticModel,
  embedLatent,
  embedPixels,
  generatePixels,
} from "./synthetic.js";

interface Request {
  id?: unknown;
  op?: unknown;
  [key: string]: unknown;
}

function errorMessage(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}

function encodeF32(values: ArrayLike<number>): string {
  const buf = Buffer.alloc(values.length * 4);
  for (let i = 0; i < values.length; i++) {
    buf.writeFloatLE(values[i], i * 4);
  }
  return buf.toString("base64");
}

function decodeF32(data: unknown, count: number): Float64Array {
  if (typeof data !== "string") {
    throw new Error("data_b64 must be a base64 string");
  }
  const buf = Buffer.from(data, "base64");
  if (buf.length !== count * 4) {
    throw new Error(`payload holds ${buf.length / 4} f32 values, expected ${count}`);
  }
  const out = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    out[i] = buf.readFloatLE(i * 4);
  }
  return out;
}

function asLatentRows(value: unknown, dim: number): number[][] {
  if (!Array.isArray(value)) {
    throw new Error("latents must be an array of latent vectors");
  }
  return value.map((row) => {
    if (!Array.isArray(row) || row.length !== dim) {
      throw new Error(`latents must be rows of length ${dim}`);
    }
    return row as number[];
  });
}

export function handleLine(model: SyntheticModel, line: string): string {
  let request: Request;
  try {
    const parsed: unknown = JSON.parse(line);
    if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
      throw new Error("request must be a JSON object");
    }
    request = parsed as Request;
  } catch (err) {
    return JSON.stringify({ id: 0, ok: false, error: `malformed request: ${errorMessage(err)}` });
  }
  const id = typeof request.id === "number" ? request.id : 0;
  try {
    return JSON.stringify(dispatch(model, id, request));
  } catch (err) {
    return JSON.stringify({ id, ok: false, error: errorMessage(err) });
  }
}

function dispatch(model: SyntheticModel, id: number, request: Request): object {
  const imageShape = [1, 1, model.embeddingDim + model.attributeDim];
  switch (request.op) {
    case "info":
      return {
        id,
        ok: true,
        latent_dim: model.latentDim,
        embedding_dim: model.embeddingDim,
        image_shape: imageShape,
        name:
          `model-server-ts:synthetic(D=${model.latentDim},m=${model.embeddingDim},` +
          `k=${model.attributeDim},seed=${model.seed})`,
        fused: true,
        concurrent: false,
        squash_offset: model.squashOffset,
        squash_scale: model.squashScale,
        attribute_dim: model.attributeDim,
        max_amplitude: MAX_AMPLITUDE,
      };
    case "generate_embed": {
      const rows = asLatentRows(request.latents, model.latentDim);
      return { id, ok: true, embeddings: rows.map((z) => embedLatent(model, z)) };
    }
    case "generate": {
      const latent = request.latent;
      if (!Array.isArray(latent)) {
        throw new Error("generate needs a 'latent' array");
      }
      const pixels = generatePixels(model, latent as number[]);
      return { id, ok: true, shape: imageShape, data_b64: encodeF32(pixels) };
    }
    case "embed": {
      const shape = request.shape;
      if (!Array.isArray(shape) || shape.length !== 3) {
        throw new Error("embed needs a 3-element 'shape' array");
      }
      const dims = shape.map(Number);
      if (dims[0] !== 1 || dims[1] !== 1 || dims[2] !== imageShape[2]) {
        throw new Error(
          `image shape [${dims.join(",")}] does not match backend shape [${imageShape.join(",")}]`,
        );
      }
      const pixels = decodeF32(request.data_b64, imageShape[2]);
      return { id, ok: true, embedding: embedPixels(model, pixels) };
    }
    default:
      return { id, ok: false, error: `unknown op ${JSON.stringify(request.op ?? null)}` };
  }
}
