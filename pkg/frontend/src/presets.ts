import type { UserConfig } from "./types";

/** One-click profiles, mirroring the config documents shipped with the
    scoring engine CLI (src/walkgrid/data/configs/). */
export const PRESETS: Array<{ label: string; config: UserConfig }> = [
  {
    label: "Young Professional",
    config: {
      name: "Young Professional",
      entries: [
        { members: ["cafes", "restaurants", "bars"], tier: "standard", decay: "expansive" },
        { members: ["metro_stations"], tier: "preferred", decay: "focused" },
        { members: ["atms"], tier: "standard", decay: "balanced" },
        { members: ["fitness_stations"], tier: "standard", decay: "focused" },
        { members: ["convenience_stores"], tier: "standard", decay: "balanced" },
        { members: ["pharmacies"], tier: "standard", decay: "balanced" },
      ],
    },
  },
  {
    label: "Family with Children",
    config: {
      name: "Family with Children",
      entries: [
        { members: ["schools"], tier: "required", decay: "focused" },
        { members: ["playgrounds"], tier: "preferred", decay: "balanced" },
        { members: ["hospitals"], tier: "preferred", decay: "focused" },
        { members: ["pharmacies"], tier: "standard", decay: "balanced" },
        { members: ["supermarkets"], tier: "preferred", decay: "balanced" },
        { members: ["grocery_stores"], tier: "standard", decay: "balanced" },
        { members: ["libraries"], tier: "standard", decay: "focused" },
        { members: ["swimming_pools"], tier: "standard", decay: "focused" },
      ],
    },
  },
  {
    label: "Senior Citizen",
    config: {
      name: "Senior Citizen",
      entries: [
        { members: ["hospitals"], tier: "required", decay: "focused" },
        { members: ["pharmacies"], tier: "preferred", decay: "balanced" },
        { members: ["banks"], tier: "preferred", decay: "focused" },
        { members: ["atms"], tier: "standard", decay: "balanced" },
        { members: ["supermarkets"], tier: "standard", decay: "balanced" },
        { members: ["convenience_stores", "general_stores"], tier: "standard", decay: "expansive" },
        { members: ["parks"], tier: "standard", decay: "balanced" },
      ],
    },
  },
];
