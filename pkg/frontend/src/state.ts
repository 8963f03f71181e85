/** Shared view state with synchronized selection across views.
 *
 * Every view subscribes to the bus; a selection event updates each
 * subscriber exactly once. Re-entrant dispatches of the same value are
 * swallowed, so views may safely call select* from inside their update
 * handlers without creating echo loops.
 */

export interface ViewState {
  sessionId: string | null;
  variables: string[];
  selectedVariables: string[];
  mapVariable: string | null;
  selectedGroup: Record<string, string> | null;
  selectedCluster: number | null;
  k: number;
}

export type StateListener = (state: Readonly<ViewState>, event: StateEvent) => void;

export type StateEvent =
  | { kind: "session" }
  | { kind: "variables" }
  | { kind: "group" }
  | { kind: "cluster" }
  | { kind: "map-variable" }
  | { kind: "k" };

export class StateBus {
  private state: ViewState = {
    sessionId: null,
    variables: [],
    selectedVariables: [],
    mapVariable: null,
    selectedGroup: null,
    selectedCluster: null,
    k: 5,
  };

  private listeners: StateListener[] = [];
  private dispatching = false;
  private pending: StateEvent[] = [];

  get current(): Readonly<ViewState> {
    return this.state;
  }

  subscribe(listener: StateListener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(event: StateEvent): void {
    // Queue events raised while a dispatch is in flight; each still
    // reaches every listener exactly once, in order.
    this.pending.push(event);
    if (this.dispatching) return;
    this.dispatching = true;
    try {
      while (this.pending.length > 0) {
        const next = this.pending.shift()!;
        for (const listener of [...this.listeners]) {
          listener(this.state, next);
        }
      }
    } finally {
      this.dispatching = false;
    }
  }

  setSession(sessionId: string, variables: string[]): void {
    this.state = {
      ...this.state,
      sessionId,
      variables,
      selectedVariables: [],
      selectedGroup: null,
      selectedCluster: null,
      mapVariable: null,
    };
    this.emit({ kind: "session" });
  }

  setSelectedVariables(names: string[]): void {
    if (sameList(names, this.state.selectedVariables)) return;
    this.state = { ...this.state, selectedVariables: [...names] };
    this.emit({ kind: "variables" });
  }

  selectGroup(group: Record<string, string> | null): void {
    if (sameRecord(group, this.state.selectedGroup)) return;
    this.state = { ...this.state, selectedGroup: group, selectedCluster: null };
    this.emit({ kind: "group" });
  }

  selectCluster(cluster: number | null): void {
    if (cluster === this.state.selectedCluster) return;
    this.state = { ...this.state, selectedCluster: cluster };
    this.emit({ kind: "cluster" });
  }

  setMapVariable(name: string | null): void {
    if (name === this.state.mapVariable) return;
    this.state = { ...this.state, mapVariable: name };
    this.emit({ kind: "map-variable" });
  }

  setK(k: number): void {
    if (k === this.state.k) return;
    this.state = { ...this.state, k, selectedCluster: null };
    this.emit({ kind: "k" });
  }
}

function sameList(a: string[], b: string[]): boolean {
  return a.length === b.length && a.every((v, i) => v === b[i]);
}

function sameRecord(a: Record<string, string> | null, b: Record<string, string> | null): boolean {
  if (a === null || b === null) return a === b;
  const ka = Object.keys(a).sort();
  const kb = Object.keys(b).sort();
  return ka.length === kb.length && ka.every((k, i) => k === kb[i] && a[k] === b[kb[i]]);
}
