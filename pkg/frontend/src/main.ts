/** Page wiring: one question in flight at a time, up to three cards out.
 *
 * A new submit aborts the pending request. Errors show in a banner without
 * clearing the input or the previous answers.
 */

import { ApiError, askQuestion, fetchHealth } from './api.js';
import { buildCard } from './cards.js';

export function initApp(root: HTMLElement): void {
  root.replaceChildren();

  const heading = document.createElement('h1');
  heading.textContent = 'logquest';

  const form = document.createElement('form');
  const input = document.createElement('input');
  input.type = 'text';
  input.name = 'question';
  input.placeholder = 'Ask a question';
  input.autocomplete = 'off';
  const button = document.createElement('button');
  button.type = 'submit';
  button.textContent = 'Ask';
  button.disabled = true;
  form.append(input, button);

  const banner = document.createElement('div');
  banner.className = 'banner';
  banner.hidden = true;

  const status = document.createElement('p');
  status.className = 'status';

  const results = document.createElement('section');
  results.className = 'results';

  const health = document.createElement('p');
  health.className = 'health';

  root.append(heading, form, banner, status, results, health);

  input.addEventListener('input', () => {
    button.disabled = input.value.trim() === '';
  });

  let inFlight: AbortController | null = null;

  form.addEventListener('submit', (event) => {
    event.preventDefault();
    const question = input.value.trim();
    if (!question) return;
    inFlight?.abort();
    const controller = new AbortController();
    inFlight = controller;
    void submit(question, controller);
  });

  async function submit(question: string, controller: AbortController): Promise<void> {
    banner.hidden = true;
    status.textContent = 'Asking...';
    try {
      const { records, diagnostic } = await askQuestion(question, controller.signal);
      if (controller !== inFlight) return;
      results.replaceChildren(...records.map((record, i) => buildCard(record, i + 1)));
      status.textContent = diagnostic ?? '';
    } catch (error) {
      if (controller.signal.aborted || controller !== inFlight) return;
      showError(error);
    } finally {
      if (controller === inFlight) inFlight = null;
    }
  }

  function showError(error: unknown): void {
    banner.textContent =
      error instanceof ApiError
        ? error.message
        : 'cannot reach the service';
    banner.hidden = false;
    status.textContent = '';
  }

  void fetchHealth()
    .then((state) => {
      health.textContent = `${state.passages} passages, ${state.background_clauses} background clauses`;
    })
    .catch(() => {
      health.textContent = '';
    });
}

const appRoot = document.getElementById('app');
if (appRoot) initApp(appRoot);
