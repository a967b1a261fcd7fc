import type { DecayName, Tier, UserConfig, ViewMode } from "./types";
import { DECAYS, TIERS } from "./types";

export const DEFAULT_TIER: Tier = "standard";
export const DEFAULT_DECAY: DecayName = "balanced";

export interface CategoryChoice {
  selected: boolean;
  tier: Tier;
  decay: DecayName;
  /** Substitute-group id, or null for a singleton entry. A category holds
      at most one group reference, so dual membership cannot be expressed. */
  group: string | null;
}

export interface GroupChoice {
  tier: Tier;
  decay: DecayName;
}

export interface UiConfigState {
  /** Taxonomy order; config entries are emitted in this order so identical
      state always serializes identically. */
  order: string[];
  categories: Map<string, CategoryChoice>;
  groups: Map<string, GroupChoice>;
  viewMode: ViewMode;
  nextGroup: number;
}

export interface ValidationIssue {
  /** Which control the message belongs next to: "entries" for the panel
      itself, or "category:<id>" for one row. */
  control: string;
  message: string;
}

const defaultChoice = (): CategoryChoice => ({
  selected: false,
  tier: DEFAULT_TIER,
  decay: DEFAULT_DECAY,
  group: null,
});

export function createState(categoryIds: string[]): UiConfigState {
  const categories = new Map<string, CategoryChoice>();
  for (const id of categoryIds) categories.set(id, defaultChoice());
  return {
    order: [...categoryIds],
    categories,
    groups: new Map(),
    viewMode: "ward",
    nextGroup: 1,
  };
}

function choice(state: UiConfigState, id: string): CategoryChoice {
  const c = state.categories.get(id);
  if (!c) throw new Error(`unknown category ${JSON.stringify(id)}`);
  return c;
}

export function toggleCategory(state: UiConfigState, id: string, on?: boolean): void {
  const c = choice(state, id);
  c.selected = on ?? !c.selected;
  if (!c.selected) c.group = null;
}

export function setCategoryTier(state: UiConfigState, id: string, tier: Tier): void {
  choice(state, id).tier = tier;
}

export function setCategoryDecay(state: UiConfigState, id: string, decay: DecayName): void {
  choice(state, id).decay = decay;
}

export function createGroup(state: UiConfigState): string {
  const gid = `group-${state.nextGroup++}`;
  state.groups.set(gid, { tier: DEFAULT_TIER, decay: DEFAULT_DECAY });
  return gid;
}

export function assignGroup(state: UiConfigState, id: string, groupId: string | null): void {
  if (groupId !== null && !state.groups.has(groupId)) {
    throw new Error(`unknown group ${JSON.stringify(groupId)}`);
  }
  const c = choice(state, id);
  c.group = groupId;
  if (groupId !== null) c.selected = true;
}

export function removeGroup(state: UiConfigState, groupId: string): void {
  state.groups.delete(groupId);
  for (const c of state.categories.values()) {
    if (c.group === groupId) c.group = null;
  }
}

export function setGroupTier(state: UiConfigState, groupId: string, tier: Tier): void {
  const g = state.groups.get(groupId);
  if (g) g.tier = tier;
}

export function setGroupDecay(state: UiConfigState, groupId: string, decay: DecayName): void {
  const g = state.groups.get(groupId);
  if (g) g.decay = decay;
}

export function setViewMode(state: UiConfigState, mode: ViewMode): void {
  state.viewMode = mode;
}

export function groupMembers(state: UiConfigState, groupId: string): string[] {
  return state.order.filter((id) => {
    const c = state.categories.get(id);
    return c !== undefined && c.selected && c.group === groupId;
  });
}

/** Client-side mirror of the service's structural config rules, so an
    invalid state is caught next to the offending control instead of as a
    400 response. */
export function validate(state: UiConfigState, knownIds: Set<string>): ValidationIssue[] {
  const issues: ValidationIssue[] = [];
  let anySelected = false;
  for (const [id, c] of state.categories) {
    if (!c.selected) continue;
    anySelected = true;
    if (!knownIds.has(id)) {
      issues.push({ control: `category:${id}`, message: `unknown category ${id}` });
    }
    if (!TIERS.includes(c.tier)) {
      issues.push({ control: `category:${id}`, message: `bad tier ${c.tier}` });
    }
    if (!DECAYS.includes(c.decay)) {
      issues.push({ control: `category:${id}`, message: `bad decay ${c.decay}` });
    }
  }
  if (!anySelected) {
    issues.push({ control: "entries", message: "select at least one category" });
  }
  return issues;
}

export function buildConfig(state: UiConfigState, name?: string): UserConfig {
  const config: UserConfig = { entries: [] };
  if (name) config.name = name;
  const groupIds = [...state.groups.keys()].sort();
  for (const gid of groupIds) {
    const members = groupMembers(state, gid);
    if (members.length === 0) continue; // empty groups do not travel
    const g = state.groups.get(gid)!;
    config.entries.push({ members, tier: g.tier, decay: g.decay });
  }
  for (const id of state.order) {
    const c = state.categories.get(id)!;
    if (c.selected && c.group === null) {
      config.entries.push({ members: [id], tier: c.tier, decay: c.decay });
    }
  }
  return config;
}

export function hasRequired(state: UiConfigState): boolean {
  for (const [gid, g] of state.groups) {
    if (g.tier === "required" && groupMembers(state, gid).length > 0) return true;
  }
  for (const c of state.categories.values()) {
    if (c.selected && c.group === null && c.tier === "required") return true;
  }
  return false;
}

/** Load a config document (preset button or imported file) into the state,
    replacing the current selection. Members the taxonomy does not know are
    dropped and returned for the caller to surface. */
export function applyConfig(state: UiConfigState, config: UserConfig): string[] {
  for (const c of state.categories.values()) {
    c.selected = false;
    c.tier = DEFAULT_TIER;
    c.decay = DEFAULT_DECAY;
    c.group = null;
  }
  state.groups.clear();
  const dropped: string[] = [];
  for (const entry of config.entries) {
    const members = entry.members.filter((m) => {
      if (state.categories.has(m)) return true;
      dropped.push(m);
      return false;
    });
    if (members.length === 0) continue;
    if (members.length === 1) {
      const c = state.categories.get(members[0])!;
      c.selected = true;
      c.tier = entry.tier;
      c.decay = entry.decay;
    } else {
      const gid = createGroup(state);
      state.groups.set(gid, { tier: entry.tier, decay: entry.decay });
      for (const m of members) {
        const c = state.categories.get(m)!;
        c.selected = true;
        c.group = gid;
      }
    }
  }
  return dropped;
}

export function exportConfig(state: UiConfigState, name?: string): string {
  return JSON.stringify(buildConfig(state, name), null, 2) + "\n";
}

export function parseConfigFile(text: string): UserConfig {
  const doc = JSON.parse(text);
  if (typeof doc !== "object" || doc === null || !Array.isArray(doc.entries)) {
    throw new Error("config file must be an object with an entries array");
  }
  for (const entry of doc.entries) {
    if (!Array.isArray(entry.members) || entry.members.length === 0) {
      throw new Error("every entry needs a non-empty members array");
    }
    if (!TIERS.includes(entry.tier)) throw new Error(`bad tier ${entry.tier}`);
    if (!DECAYS.includes(entry.decay)) throw new Error(`bad decay ${entry.decay}`);
  }
  return doc as UserConfig;
}
