// Browser bootstrap: polls the service and redraws the panels. All markup
// comes from the pure renderers; this file only wires DOM events.

import { ApiClient } from './api.js';
import { renderChat, renderEventFeed, renderMemoryPanel, renderTrace } from './render.js';
import type { ChatMessage } from './types.js';

const POLL_MS = 2000;

export async function bootstrap(root: Document, api: ApiClient = new ApiClient()): Promise<void> {
  const memoryEl = root.getElementById('memory');
  const eventsEl = root.getElementById('events');
  const traceEl = root.getElementById('trace');
  const chatEl = root.getElementById('chat');
  const form = root.getElementById('ask-form') as HTMLFormElement | null;
  const input = root.getElementById('ask-input') as HTMLInputElement | null;
  if (!memoryEl || !eventsEl || !traceEl || !chatEl || !form || !input) {
    throw new Error('missing UI containers');
  }

  const sessionId = new URLSearchParams(root.location?.search ?? '').get('session') ?? 'ui';
  const existing = await api.listSessions();
  if (!existing.sessions.includes(sessionId)) {
    await api.createSession(sessionId);
  }

  const messages: ChatMessage[] = [];

  async function redraw(): Promise<void> {
    const [memory, events] = await Promise.all([
      api.getMemory(sessionId),
      api.getEvents(sessionId),
    ]);
    memoryEl!.innerHTML = renderMemoryPanel(memory);
    eventsEl!.innerHTML = renderEventFeed(events);
    chatEl!.innerHTML = renderChat(messages);
  }

  form.addEventListener('submit', async (event) => {
    event.preventDefault();
    const text = input.value.trim();
    if (!text) return;
    input.value = '';
    messages.push({ role: 'user', text });
    chatEl.innerHTML = renderChat(messages);
    try {
      const result = await api.postQuery(sessionId, text);
      messages.push({ role: 'assistant', text: result.answer, traceId: result.trace_id });
      traceEl.innerHTML = renderTrace(result.trace);
    } catch (err) {
      messages.push({ role: 'assistant', text: `error: ${String(err)}` });
    }
    await redraw();
  });

  chatEl.addEventListener('click', async (event) => {
    const target = event.target as HTMLElement;
    const traceId = target?.dataset?.traceId;
    if (!traceId) return;
    const trace = await api.getTrace(sessionId, traceId);
    traceEl.innerHTML = renderTrace(trace);
  });

  await redraw();
  setInterval(() => void redraw().catch(() => undefined), POLL_MS);
}

if (typeof document !== 'undefined') {
  void bootstrap(document);
}
