/** Phase events from the session event stream. */

export type PhaseEvent = {
  seq: number;
  round: number;
  phase: string;
};

/** Parse the data payloads out of a raw SSE stream chunk. */
export function parseSseChunk(chunk: string): PhaseEvent[] {
  const events: PhaseEvent[] = [];
  for (const line of chunk.split("\n")) {
    if (!line.startsWith("data:")) continue;
    try {
      const parsed = JSON.parse(line.slice("data:".length).trim());
      if (typeof parsed?.phase === "string") {
        events.push(parsed as PhaseEvent);
      }
    } catch {
      // keep-alives and retry hints are not JSON; ignore them
    }
  }
  return events;
}

/**
 * Subscribe to a session's phase events. The server closes idle streams;
 * EventSource reconnects on its own and `since` resumes after the last
 * event already seen.
 */
export function watchPhases(
  base: string,
  sessionId: string,
  onPhase: (event: PhaseEvent) => void,
): () => void {
  let lastSeq = -1;
  const source = new EventSource(
    `${base}/sessions/${sessionId}/events?follow=true`,
  );
  source.addEventListener("phase", (message: MessageEvent<string>) => {
    for (const event of parseSseChunk(`data: ${message.data}`)) {
      if (event.seq > lastSeq) {
        lastSeq = event.seq;
        onPhase(event);
      }
    }
  });
  return () => source.close();
}
