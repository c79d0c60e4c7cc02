import { describe, expect, it } from "vitest";

import { handleLine } from "../src/protocol.js";
import { buildModel, embedLatent } from "../src/synthetic.js";

const model = buildModel(8, 32, 16, 42);
const Z = [0.9, -0.7, 0.8, -0.6, 0.7, 0.9, -0.8, 0.6];

function roundTrip(request: object): any {
  return JSON.parse(handleLine(model, JSON.stringify(request)));
}

describe("protocol v1", () => {
  it("answers info with the advertised dimensions", () => {
    const reply = roundTrip({ id: 1, op: "info" });
    expect(reply).toMatchObject({
      id: 1,
      ok: true,
      latent_dim: 8,
      embedding_dim: 32,
      image_shape: [1, 1, 48],
      fused: true,
    });
    expect(typeof reply.name).toBe("string");
  });

  it("echoes the request id", () => {
    expect(roundTrip({ id: 77, op: "info" }).id).toBe(77);
  });

  it("serves fused generate_embed batches in order", () => {
    const reply = roundTrip({ id: 2, op: "generate_embed", latents: [Z, Z.map((v) => -v)] });
    expect(reply.ok).toBe(true);
    expect(reply.embeddings).toEqual([
      embedLatent(model, Z),
      embedLatent(model, Z.map((v) => -v)),
    ]);
  });

  it("round-trips generate and embed through base64 f32", () => {
    const generated = roundTrip({ id: 3, op: "generate", latent: Z });
    expect(generated.ok).toBe(true);
    expect(generated.shape).toEqual([1, 1, 48]);
    const embedded = roundTrip({
      id: 4,
      op: "embed",
      shape: generated.shape,
      data_b64: generated.data_b64,
    });
    expect(embedded.ok).toBe(true);
    const fused = embedLatent(model, Z);
    for (let i = 0; i < fused.length; i++) {
      expect(Math.abs(embedded.embedding[i] - fused[i])).toBeLessThanOrEqual(1e-5);
    }
  });

  it("rejects unknown ops but keeps serving", () => {
    const reply = roundTrip({ id: 5, op: "transmogrify" });
    expect(reply.ok).toBe(false);
    expect(reply.error).toContain("unknown op");
    expect(roundTrip({ id: 6, op: "info" }).ok).toBe(true);
  });

  it("rejects malformed requests with ok:false", () => {
    const reply = JSON.parse(handleLine(model, "this is not json"));
    expect(reply.ok).toBe(false);
    expect(reply.error).toContain("malformed request");
  });

  it("rejects wrong latent lengths", () => {
    const reply = roundTrip({ id: 7, op: "generate_embed", latents: [[1, 2, 3]] });
    expect(reply.ok).toBe(false);
  });

  it("rejects mismatched image shapes", () => {
    const reply = roundTrip({ id: 8, op: "embed", shape: [1, 1, 3], data_b64: "AAAA" });
    expect(reply.ok).toBe(false);
    expect(reply.error).toContain("shape");
  });

  it("ignores unknown fields", () => {
    const reply = roundTrip({ id: 9, op: "info", flavor: "mint" });
    expect(reply.ok).toBe(true);
  });
});
