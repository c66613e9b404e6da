// Pure renderers: service payload in, HTML string out. No fetching, no
// state, no DOM reads, so the contract tests can assert on plain strings.

import type {
  ChatMessage,
  EventsPayload,
  IngestRecord,
  MemoryItem,
  MemoryPayload,
  PlanDoc,
  TracePayload,
} from './types.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

function kindBadge(kind: MemoryItem['kind']): string {
  const label = kind === 'long_term' ? 'long' : kind === 'short_term' ? 'short' : 'new';
  return `<span class="badge kind-${kind}">${label}</span>`;
}

function memoryRow(item: MemoryItem): string {
  return (
    `<tr data-item-no="${item.item_no}" data-seq="${item.seq}">` +
    `<td class="no">${item.item_no}.</td>` +
    `<td class="concept">[${escapeHtml(item.concept_id)}]</td>` +
    `<td class="text">${escapeHtml(item.text)}</td>` +
    `<td>${kindBadge(item.kind)}</td>` +
    `</tr>`
  );
}

function memoryTable(title: string, items: MemoryItem[], extra = ''): string {
  const rows = items.map(memoryRow).join('');
  const body = items.length
    ? `<table class="memory-table"><tbody>${rows}</tbody></table>`
    : `<p class="empty">(empty)</p>`;
  return `<section class="memory-panel"><h3>${title}${extra}</h3>${body}</section>`;
}

export function renderMemoryPanel(memory: MemoryPayload): string {
  const usage = `<span class="usage">${memory.dynamic.length}/${memory.tau}</span>`;
  return (
    memoryTable('Dynamic buffer ', memory.dynamic, usage) +
    memoryTable('Static store', memory.static)
  );
}

function planSummary(plan: PlanDoc): string {
  const moved = plan.static_ops
    .filter((op) => op.op === 'add' && op.memory)
    .map((op) => `<li>${escapeHtml(op.memory ?? '')}</li>`)
    .join('');
  return moved ? `<ul class="moved">${moved}</ul>` : '';
}

function recordBadges(record: IngestRecord): string {
  const badges: string[] = [];
  if (record.plan || record.forced_transition) {
    badges.push('<span class="badge event-transition">transition</span>');
  }
  if (record.evicted.length > 0) {
    badges.push('<span class="badge event-eviction">eviction</span>');
  }
  if (record.status !== 'ok') {
    badges.push(`<span class="badge event-${record.status}">${record.status}</span>`);
  }
  return badges.join(' ');
}

export function renderEventFeed(payload: EventsPayload): string {
  if (!payload.events.length) {
    return '<p class="empty">No memory events yet.</p>';
  }
  const rows = payload.events
    .map((record) => {
      const parts = [
        `<div class="event" data-step="${record.step}">`,
        `<span class="turn">turn ${record.turn_id}</span> `,
        `<span class="ops">${record.ops.length} op(s)</span> `,
        recordBadges(record),
      ];
      if (record.plan) parts.push(planSummary(record.plan));
      if (record.forced_transition) parts.push(planSummary(record.forced_transition));
      if (record.evicted.length) {
        const gone = record.evicted
          .map((item) => `<li>${escapeHtml(item.text)}</li>`)
          .join('');
        parts.push(`<ul class="evicted">${gone}</ul>`);
      }
      parts.push('</div>');
      return parts.join('');
    })
    .join('');
  return `<div class="event-feed">${rows}</div>`;
}

export function renderTrace(trace: TracePayload): string {
  const steps = trace.events
    .map((e) => `<li data-step="${e.step}">${escapeHtml(e.name)}</li>`)
    .join('');
  const resolved = trace.resolved.map((c) => escapeHtml(c)).join(', ') || '(none)';
  const contexts = trace.contexts
    .map((ctx) => {
      const bullets = ctx.bullets.map((b) => `<li>${escapeHtml(b)}</li>`).join('');
      const flag = ctx.degraded ? ' <span class="badge event-degraded">degraded</span>' : '';
      return `<div class="context"><h4>[${escapeHtml(ctx.concept_id)}]${flag}</h4><ul>${bullets}</ul></div>`;
    })
    .join('');
  return (
    `<section class="trace" data-trace-id="${trace.trace_id}">` +
    `<h3>Trace ${trace.trace_id}</h3>` +
    `<p class="query">${escapeHtml(trace.query.text)}</p>` +
    `<p class="resolved">resolved: ${resolved}</p>` +
    `<ol class="steps">${steps}</ol>` +
    contexts +
    (trace.answer ? `<p class="answer">${escapeHtml(trace.answer)}</p>` : '') +
    `</section>`
  );
}

export function renderChat(messages: ChatMessage[]): string {
  if (!messages.length) return '<p class="empty">Say something to begin.</p>';
  const rows = messages
    .map((m) => {
      const trace = m.traceId ? ` <a class="trace-link" data-trace-id="${m.traceId}">trace</a>` : '';
      return `<div class="msg msg-${m.role}"><b>${m.role}:</b> ${escapeHtml(m.text)}${trace}</div>`;
    })
    .join('');
  return `<div class="chat-log">${rows}</div>`;
}
