import { describe, expect, it } from "vitest";

import { ApiError, RetryQueue, type JudgmentPayload } from "../src/api.js";
import {
  CRITERIA,
  PairReview,
  ReviewSession,
  pairsFromManifest,
} from "../src/review.js";

function payloadStub(entry = "e", engine = "g"): JudgmentPayload {
  return {
    entry,
    engine,
    criteria: {
      illumination_removal: true,
      content_preservation: true,
      contrast: true,
      color_accuracy: true,
    },
    verdict: "accept",
    note: "",
  };
}

describe("pairsFromManifest", () => {
  it("walks entries in manifest order with engines sorted", () => {
    const pairs = pairsFromManifest({
      entries: [
        { id: "zz", engines: ["unet", "classical"] },
        { id: "aa", engines: ["classical"] },
        { id: "mm", engines: [] },
      ],
      engines: ["classical", "unet"],
    });
    expect(pairs).toEqual([
      { entry: "zz", engine: "classical" },
      { entry: "zz", engine: "unet" },
      { entry: "aa", engine: "classical" },
    ]);
  });
});

describe("PairReview", () => {
  it("starts with every criterion passing and an empty note", () => {
    const draft = new PairReview();
    expect(draft.failedCriteria()).toEqual([]);
    expect(draft.note).toBe("");
  });

  it("toggles criteria", () => {
    const draft = new PairReview();
    draft.toggle("contrast");
    expect(draft.criteria.contrast).toBe(false);
    expect(draft.failedCriteria()).toEqual(["contrast"]);
    draft.toggle("contrast");
    expect(draft.failedCriteria()).toEqual([]);
  });

  it("never requires a note for a clean accept or any discard", () => {
    const draft = new PairReview();
    expect(draft.problem("accept")).toBeNull();
    draft.set("color_accuracy", false);
    expect(draft.problem("discard")).toBeNull();
  });

  it("requires a note to accept over a failed criterion", () => {
    const draft = new PairReview();
    draft.set("contrast", false);
    expect(draft.needsNote("accept")).toBe(true);
    expect(draft.problem("accept")).toContain("contrast");
    draft.note = "   ";
    expect(draft.problem("accept")).not.toBeNull();
    draft.note = "washed out but legible";
    expect(draft.problem("accept")).toBeNull();
  });

  it("emits an independent criteria copy in the payload", () => {
    const draft = new PairReview();
    const payload = draft.payload({ entry: "p", engine: "g" }, "accept");
    draft.set("contrast", false);
    expect(payload.criteria.contrast).toBe(true);
    expect(payload).toMatchObject({ entry: "p", engine: "g", verdict: "accept" });
  });
});

describe("ReviewSession", () => {
  const pairs = [0, 1, 2, 3, 4].map((i) => ({ entry: `p${i}`, engine: "classical" }));

  function collectingSubmit(): {
    sent: JudgmentPayload[];
    submit: (p: JudgmentPayload) => Promise<number>;
  } {
    const sent: JudgmentPayload[] = [];
    return {
      sent,
      submit: async (p) => {
        sent.push(p);
        return sent.length;
      },
    };
  }

  it("runs a scripted five-pair review: three accepts, two discards", async () => {
    const { sent, submit } = collectingSubmit();
    const session = new ReviewSession(pairs, submit);

    await session.judge("accept"); // p0: clean accept

    session.draft.set("contrast", false); // p1: discard, contrast failed
    await session.judge("discard");

    await session.judge("accept"); // p2: clean accept

    session.draft.set("illumination_removal", false); // p3: discard
    session.draft.set("content_preservation", false);
    await session.judge("discard");

    session.draft.set("color_accuracy", false); // p4: accept-with-note
    session.draft.note = "slight tint, keeping it";
    await session.judge("accept");

    expect(sent).toHaveLength(5);
    expect(sent.map((p) => p.entry)).toEqual(["p0", "p1", "p2", "p3", "p4"]);
    expect(sent.map((p) => p.verdict)).toEqual([
      "accept",
      "discard",
      "accept",
      "discard",
      "accept",
    ]);
    expect(sent[1].criteria.contrast).toBe(false);
    expect(sent[3].criteria.illumination_removal).toBe(false);
    expect(sent[3].criteria.content_preservation).toBe(false);
    expect(sent[4].criteria.color_accuracy).toBe(false);
    expect(sent[4].note).toBe("slight tint, keeping it");
    expect(session.done).toBe(true);
    expect(session.progress()).toEqual({
      total: 5,
      reviewed: 5,
      accepted: 3,
      discarded: 2,
    });
  });

  it("blocks an invalid accept before it reaches the network", async () => {
    const { sent, submit } = collectingSubmit();
    const session = new ReviewSession(pairs, submit);
    session.draft.set("contrast", false);
    await expect(session.judge("accept")).rejects.toThrow(/requires a note/);
    expect(sent).toHaveLength(0);
    expect(session.current()).toEqual(pairs[0]); // still on the same pair
    // criteria survive the rejection so the reviewer can add the note
    expect(session.draft.criteria.contrast).toBe(false);
  });

  it("resets the draft when moving between pairs", async () => {
    const session = new ReviewSession(pairs, async () => 1);
    session.draft.set("contrast", false);
    session.draft.note = "x";
    session.next();
    expect(session.draft.failedCriteria()).toEqual([]);
    expect(session.draft.note).toBe("");
    session.prev();
    expect(session.position()).toBe(0);
  });

  it("advances to the next unjudged pair, wrapping and skipping", async () => {
    const session = new ReviewSession(pairs, async () => 1);
    session.goTo(3);
    await session.judge("accept"); // judged p3 -> lands on p4
    expect(session.current()?.entry).toBe("p4");
    await session.judge("accept"); // judged p4 -> wraps to p0
    expect(session.current()?.entry).toBe("p0");
    await session.judge("discard"); // p0 -> p1 (p3, p4 skipped later anyway)
    expect(session.current()?.entry).toBe("p1");
  });

  it("keeps a queued judgment (null record) as reviewed", async () => {
    const session = new ReviewSession(pairs, async () => null);
    const outcome = await session.judge("accept");
    expect(outcome.record).toBeNull();
    expect(session.progress().reviewed).toBe(1);
  });

  it("exposes four criteria ids", () => {
    expect(CRITERIA).toHaveLength(4);
  });
});

describe("RetryQueue", () => {
  it("parks judgments while the server is down and flushes in order", async () => {
    let up = false;
    let nextRecord = 1;
    const queue = new RetryQueue(async () => {
      if (!up) throw new TypeError("fetch failed");
      return nextRecord++;
    });

    expect(await queue.submit(payloadStub("a"))).toBeNull();
    expect(await queue.submit(payloadStub("b"))).toBeNull();
    expect(queue.pending.map((p) => p.entry)).toEqual(["a", "b"]);

    up = true;
    expect(await queue.flush()).toEqual([1, 2]);
    expect(queue.pending).toHaveLength(0);
    expect(await queue.submit(payloadStub("c"))).toBe(3);
  });

  it("drains the backlog before a fresh submit goes out", async () => {
    const order: string[] = [];
    let up = false;
    const queue = new RetryQueue(async (p) => {
      if (!up) throw new TypeError("fetch failed");
      order.push(p.entry);
      return order.length;
    });
    await queue.submit(payloadStub("old"));
    up = true;
    expect(await queue.submit(payloadStub("new"))).toBe(2);
    expect(order).toEqual(["old", "new"]);
  });

  it("propagates server rejections instead of queueing them", async () => {
    const queue = new RetryQueue(async () => {
      throw new ApiError(400, "note required");
    });
    await expect(queue.submit(payloadStub())).rejects.toThrow("note required");
    expect(queue.pending).toHaveLength(0);
  });
});
