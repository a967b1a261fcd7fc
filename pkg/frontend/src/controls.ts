import type { TaxonomyCategory, ViewMode } from "./types";
import { DECAYS, TIERS } from "./types";
import type { UiConfigState, ValidationIssue } from "./state";
import {
  assignGroup,
  createGroup,
  groupMembers,
  removeGroup,
  setCategoryDecay,
  setCategoryTier,
  setGroupDecay,
  setGroupTier,
  setViewMode,
  toggleCategory,
} from "./state";
import { PRESETS } from "./presets";
import type { UserConfig } from "./types";

export interface ControlsOptions {
  state: UiConfigState;
  categories: TaxonomyCategory[];
  onChange: () => void;
  onPreset: (config: UserConfig) => void;
  onExport: () => void;
  onImport: (file: File) => void;
}

export interface ControlsController {
  element: HTMLElement;
  refresh: () => void;
  setIssues: (issues: ValidationIssue[]) => void;
}

const option = (value: string, label?: string): HTMLOptionElement => {
  const o = document.createElement("option");
  o.value = value;
  o.textContent = label ?? value;
  return o;
};

export function createControls(opts: ControlsOptions): ControlsController {
  const { state } = opts;
  const displayName = new Map(opts.categories.map((c) => [c.id, c.name ?? c.id]));
  const el = document.createElement("div");
  el.className = "controls";
  let filter = "";
  let issues: ValidationIssue[] = [];

  const header = document.createElement("div");
  header.className = "controls-header";
  const title = document.createElement("h1");
  title.textContent = "walkgrid";
  header.appendChild(title);

  const viewToggle = document.createElement("div");
  viewToggle.className = "view-toggle";
  const modeInputs: HTMLInputElement[] = [];
  for (const m of ["ward", "grid"] as ViewMode[]) {
    const label = document.createElement("label");
    const input = document.createElement("input");
    input.type = "radio";
    input.name = "view-mode";
    input.value = m;
    input.checked = state.viewMode === m;
    input.addEventListener("change", () => {
      if (input.checked) {
        setViewMode(state, m);
        opts.onChange();
      }
    });
    modeInputs.push(input);
    label.appendChild(input);
    label.appendChild(document.createTextNode(m));
    viewToggle.appendChild(label);
  }
  header.appendChild(viewToggle);
  el.appendChild(header);

  const presetRow = document.createElement("div");
  presetRow.className = "preset-row";
  for (const preset of PRESETS) {
    const btn = document.createElement("button");
    btn.type = "button";
    btn.textContent = preset.label;
    btn.addEventListener("click", () => opts.onPreset(preset.config));
    presetRow.appendChild(btn);
  }
  el.appendChild(presetRow);

  const fileRow = document.createElement("div");
  fileRow.className = "file-row";
  const exportBtn = document.createElement("button");
  exportBtn.type = "button";
  exportBtn.textContent = "export config";
  exportBtn.addEventListener("click", () => opts.onExport());
  fileRow.appendChild(exportBtn);
  const importInput = document.createElement("input");
  importInput.type = "file";
  importInput.accept = "application/json";
  importInput.style.display = "none";
  importInput.addEventListener("change", () => {
    const file = importInput.files?.[0];
    if (file) opts.onImport(file);
    importInput.value = "";
  });
  const importBtn = document.createElement("button");
  importBtn.type = "button";
  importBtn.textContent = "import config";
  importBtn.addEventListener("click", () => importInput.click());
  fileRow.appendChild(importBtn);
  fileRow.appendChild(importInput);
  el.appendChild(fileRow);

  const globalIssue = document.createElement("div");
  globalIssue.className = "issue issue-global";
  el.appendChild(globalIssue);

  const search = document.createElement("input");
  search.type = "search";
  search.placeholder = "filter categories";
  search.className = "category-filter";
  search.addEventListener("input", () => {
    filter = search.value.trim().toLowerCase();
    renderRows();
  });
  el.appendChild(search);

  const list = document.createElement("div");
  list.className = "category-list";
  el.appendChild(list);

  const groupsHeader = document.createElement("div");
  groupsHeader.className = "groups-header";
  const groupsTitle = document.createElement("h2");
  groupsTitle.textContent = "substitute groups";
  groupsHeader.appendChild(groupsTitle);
  const newGroupBtn = document.createElement("button");
  newGroupBtn.type = "button";
  newGroupBtn.textContent = "new group";
  newGroupBtn.addEventListener("click", () => {
    createGroup(state);
    opts.onChange();
  });
  groupsHeader.appendChild(newGroupBtn);
  el.appendChild(groupsHeader);

  const groupList = document.createElement("div");
  groupList.className = "group-list";
  el.appendChild(groupList);

  const issueFor = (control: string): string | null => {
    const hit = issues.find((i) => i.control === control);
    return hit ? hit.message : null;
  };

  const tierSelect = (value: string, onPick: (t: (typeof TIERS)[number]) => void) => {
    const sel = document.createElement("select");
    for (const t of TIERS) sel.appendChild(option(t));
    sel.value = value;
    sel.addEventListener("change", () => onPick(sel.value as (typeof TIERS)[number]));
    return sel;
  };

  const decaySelect = (value: string, onPick: (d: (typeof DECAYS)[number]) => void) => {
    const sel = document.createElement("select");
    for (const d of DECAYS) sel.appendChild(option(d));
    sel.value = value;
    sel.addEventListener("change", () => onPick(sel.value as (typeof DECAYS)[number]));
    return sel;
  };

  const renderRows = () => {
    list.replaceChildren();
    for (const id of state.order) {
      const label = displayName.get(id) ?? id;
      if (filter && !label.toLowerCase().includes(filter) && !id.includes(filter)) continue;
      const c = state.categories.get(id)!;
      const row = document.createElement("div");
      row.className = "category-row";
      if (c.selected) row.classList.add("selected");

      const check = document.createElement("input");
      check.type = "checkbox";
      check.checked = c.selected;
      check.addEventListener("change", () => {
        toggleCategory(state, id, check.checked);
        opts.onChange();
      });
      row.appendChild(check);

      const name = document.createElement("span");
      name.className = "category-name";
      name.textContent = label;
      row.appendChild(name);

      const tier = tierSelect(c.tier, (t) => {
        setCategoryTier(state, id, t);
        opts.onChange();
      });
      const decay = decaySelect(c.decay, (d) => {
        setCategoryDecay(state, id, d);
        opts.onChange();
      });
      // a grouped category scores through its group's tier and decay
      tier.disabled = !c.selected || c.group !== null;
      decay.disabled = !c.selected || c.group !== null;
      row.appendChild(tier);
      row.appendChild(decay);

      const group = document.createElement("select");
      group.appendChild(option("", "no group"));
      for (const gid of [...state.groups.keys()].sort()) group.appendChild(option(gid));
      group.value = c.group ?? "";
      group.disabled = !c.selected && state.groups.size === 0;
      group.addEventListener("change", () => {
        assignGroup(state, id, group.value === "" ? null : group.value);
        opts.onChange();
      });
      row.appendChild(group);

      const message = issueFor(`category:${id}`);
      if (message) {
        const issue = document.createElement("span");
        issue.className = "issue";
        issue.textContent = message;
        row.appendChild(issue);
      }
      list.appendChild(row);
    }
  };

  const renderGroups = () => {
    groupList.replaceChildren();
    for (const gid of [...state.groups.keys()].sort()) {
      const g = state.groups.get(gid)!;
      const row = document.createElement("div");
      row.className = "group-row";

      const name = document.createElement("span");
      name.className = "group-name";
      name.textContent = gid;
      row.appendChild(name);

      row.appendChild(
        tierSelect(g.tier, (t) => {
          setGroupTier(state, gid, t);
          opts.onChange();
        }),
      );
      row.appendChild(
        decaySelect(g.decay, (d) => {
          setGroupDecay(state, gid, d);
          opts.onChange();
        }),
      );

      const members = document.createElement("span");
      members.className = "group-members";
      const names = groupMembers(state, gid).map((m) => displayName.get(m) ?? m);
      members.textContent = names.length > 0 ? names.join(", ") : "empty (not scored)";
      row.appendChild(members);

      const remove = document.createElement("button");
      remove.type = "button";
      remove.textContent = "remove";
      remove.addEventListener("click", () => {
        removeGroup(state, gid);
        opts.onChange();
      });
      row.appendChild(remove);
      groupList.appendChild(row);
    }
  };

  const refresh = () => {
    for (const input of modeInputs) input.checked = input.value === state.viewMode;
    const global = issueFor("entries");
    globalIssue.textContent = global ?? "";
    globalIssue.style.display = global ? "block" : "none";
    renderRows();
    renderGroups();
  };

  refresh();
  return {
    element: el,
    refresh,
    setIssues(next) {
      issues = next;
      refresh();
    },
  };
}
