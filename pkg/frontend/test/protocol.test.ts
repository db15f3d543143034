import { describe, expect, it } from "vitest";
import { decodeCommand, encodeFrame, encodeHello, quant } from "../src/protocol.js";

describe("canonical number handling", () => {
  it("quantizes to 4 decimals and kills negative zero", () => {
    expect(quant(123.456789)).toBe(123.4568);
    expect(quant(-0.00001)).toBe(0);
    expect(Object.is(quant(-0), -0)).toBe(false);
  });

  it("writes integral values without a decimal point", () => {
    const s = JSON.stringify([quant(960.0), quant(25.4)]);
    expect(s).toBe("[960,25.4]");
  });
});

describe("encodeFrame", () => {
  const pose = {
    ts_us: 8333,
    hand: true,
    palm: { x: 8, y: 354.8, z: 30 },
    palmNormal: { x: 0, y: 0, z: -1 },
    fingers: [
      { name: "thumb" as const, tip: { x: -30, y: 379.8, z: 10 }, ext: false },
      { name: "index" as const, tip: { x: 0, y: 404.8, z: 0 }, ext: true },
      { name: "middle" as const, tip: { x: 12, y: 406.8, z: 0 }, ext: false },
      { name: "ring" as const, tip: { x: 24, y: 402.8, z: 2 }, ext: false },
      { name: "pinky" as const, tip: { x: 36, y: 396.8, z: 4 }, ext: false },
    ],
  };

  it("produces the exact wire bytes", () => {
    expect(encodeFrame(pose)).toBe(
      '{"t":"frame","ts_us":8333,"hand":true,"palm":[8,354.8,30],"palm_normal":[0,0,-1],' +
        '"fingers":[{"name":"thumb","tip":[-30,379.8,10],"ext":false},' +
        '{"name":"index","tip":[0,404.8,0],"ext":true},' +
        '{"name":"middle","tip":[12,406.8,0],"ext":false},' +
        '{"name":"ring","tip":[24,402.8,2],"ext":false},' +
        '{"name":"pinky","tip":[36,396.8,4],"ext":false}]}'
    );
  });
});

describe("encodeHello", () => {
  it("matches the documented shape", () => {
    expect(encodeHello("client", "kiosk-3")).toBe('{"t":"hello","role":"client","name":"kiosk-3"}');
  });
});

describe("decodeCommand", () => {
  it("parses every command kind", () => {
    expect(decodeCommand('{"t":"move","x":960,"y":540,"seq":17,"ts_us":123456}')).toEqual({
      t: "move",
      x: 960,
      y: 540,
      seq: 17,
      ts_us: 123456,
    });
    expect(decodeCommand('{"t":"scroll","dir":"up","n":1,"seq":18,"ts_us":123999}').dir).toBe("up");
    expect(decodeCommand('{"t":"hold","seq":1,"ts_us":5}').t).toBe("hold");
    expect(decodeCommand('{"t":"release","seq":2,"ts_us":6}').t).toBe("release");
  });

  it("rejects malformed input", () => {
    expect(() => decodeCommand('{"t":"warp","seq":1,"ts_us":1}')).toThrow();
    expect(() => decodeCommand('{"t":"move","x":-5,"y":0,"seq":1,"ts_us":1}')).toThrow();
    expect(() => decodeCommand('{"t":"move","x":1,"seq":1,"ts_us":1}')).toThrow();
    expect(() => decodeCommand('{"t":"move","x":1,"y":1,"seq":1,"ts_us":1,"zz":2}')).toThrow();
    expect(() => decodeCommand("garbage")).toThrow();
  });
});
