import { describe, expect, it } from "vitest";

import { parseSseStream, SseFrame } from "./sse.js";

function streamOf(chunks: string[]): ReadableStream<Uint8Array> {
  const encoder = new TextEncoder();
  return new ReadableStream({
    start(controller) {
      for (const chunk of chunks) controller.enqueue(encoder.encode(chunk));
      controller.close();
    },
  });
}

async function collect(stream: ReadableStream<Uint8Array>): Promise<SseFrame[]> {
  const frames: SseFrame[] = [];
  for await (const frame of parseSseStream(stream)) frames.push(frame);
  return frames;
}

describe("sse parsing", () => {
  it("parses id, event, and data fields", async () => {
    const frames = await collect(
      streamOf(['id: 7\nevent: pending_approval\ndata: {"id": 7}\n\n']),
    );
    expect(frames).toEqual([{ id: "7", event: "pending_approval", data: '{"id": 7}' }]);
  });

  it("reassembles frames split across chunks", async () => {
    const frames = await collect(streamOf(["id: 1\neve", "nt: x\ndata: {", '"a": 1}\n\n']));
    expect(frames).toHaveLength(1);
    expect(JSON.parse(frames[0].data)).toEqual({ a: 1 });
  });

  it("ignores heartbeat comments", async () => {
    const frames = await collect(streamOf([": heartbeat\n\n", "id: 2\ndata: {}\n\n"]));
    expect(frames).toHaveLength(1);
    expect(frames[0].id).toBe("2");
  });

  it("yields multiple frames from one chunk", async () => {
    const frames = await collect(streamOf(["id: 1\ndata: {}\n\nid: 2\ndata: {}\n\n"]));
    expect(frames.map((f) => f.id)).toEqual(["1", "2"]);
  });
});
