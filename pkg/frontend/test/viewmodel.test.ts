import { describe, expect, it } from "vitest";

import { FrameBuffer, avIds, pickEgo } from "../src/viewmodel.js";
import { scene, vehicles } from "./fixtures.js";

describe("FrameBuffer", () => {
  it("hands out only the latest frame, never a backlog", () => {
    const buffer = new FrameBuffer();
    for (let i = 0; i < 20; i++) {
      buffer.push(scene(i, vehicles(50)));
    }
    const frame = buffer.take();
    expect(frame?.scene_id).toBe(19);
    expect(buffer.take()).toBeNull();
    expect(buffer.pending).toBe(0);
  });

  it("counts dropped frames", () => {
    const buffer = new FrameBuffer();
    for (let i = 0; i < 10; i++) {
      buffer.push(scene(i, vehicles(3)));
    }
    expect(buffer.received).toBe(10);
    expect(buffer.dropped).toBe(9);
  });

  it("keeps up with a 5 Hz stream of 50-vehicle scenes", () => {
    // render loop takes after every push: nothing drops, nothing queues
    const buffer = new FrameBuffer();
    for (let i = 0; i < 25; i++) {
      buffer.push(scene(i, vehicles(50)));
      const frame = buffer.take();
      expect(frame?.scene_id).toBe(i);
      expect(frame?.objects).toHaveLength(50);
    }
    expect(buffer.dropped).toBe(0);
  });
});

describe("ego selection", () => {
  it("lists AV ids sorted", () => {
    const s = scene(0, vehicles(6));
    expect(avIds(s)).toEqual(["AV001"]);
  });

  it("keeps the current ego while it exists, falls back to first AV", () => {
    const s = scene(0, vehicles(6));
    expect(pickEgo(s, "AV001")).toBe("AV001");
    expect(pickEgo(s, "AV999")).toBe("AV001");
    expect(pickEgo(scene(1, []), "AV001")).toBeNull();
  });
});
