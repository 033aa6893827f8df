/** UI state machine around the session view.
 *
 * One label request may be in flight at a time; while it is pending, further
 * requests are ignored rather than queued. A failed request keeps the same
 * sentence on screen and surfaces the server's reason in a banner.
 */

import { ApiClient, ApiError, LabelValue, NextItem, SessionView } from "./api.js";

export interface UiState {
  view: SessionView | null;
  pending: boolean;
  banner: string | null;
}

export type LabelApi = Pick<ApiClient, "view" | "label">;

function describe(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  return err instanceof Error ? err.message : String(err);
}

export class Labeler {
  state: UiState = { view: null, pending: false, banner: null };

  constructor(
    private readonly api: LabelApi,
    readonly sessionId: string,
    private readonly onChange: (state: UiState) => void = () => {},
  ) {}

  private set(state: UiState): void {
    this.state = state;
    this.onChange(state);
  }

  get current(): NextItem | null {
    return this.state.view?.next ?? null;
  }

  get complete(): boolean {
    const view = this.state.view;
    return view !== null && view.next === undefined;
  }

  async load(): Promise<void> {
    try {
      const view = await this.api.view(this.sessionId);
      this.set({ view, pending: false, banner: null });
    } catch (err) {
      this.set({ view: this.state.view, pending: false, banner: describe(err) });
    }
  }

  /** Label the sentence on screen; returns false when nothing was sent. */
  async label(value: LabelValue): Promise<boolean> {
    const target = this.current;
    if (this.state.pending || target === null) return false;
    this.set({ ...this.state, pending: true, banner: null });
    try {
      const view = await this.api.label(this.sessionId, target.sentence_id, value);
      this.set({ view, pending: false, banner: null });
      return true;
    } catch (err) {
      this.set({ ...this.state, pending: false, banner: describe(err) });
      return false;
    }
  }
}
