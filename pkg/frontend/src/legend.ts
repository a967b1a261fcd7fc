import { NEUTRAL_ZERO, rampGradientCss } from "./ramp";

export interface LegendController {
  element: HTMLElement;
  setGatedVisible: (visible: boolean) => void;
}

export function createLegend(): LegendController {
  const el = document.createElement("div");
  el.className = "legend";

  const zero = document.createElement("div");
  zero.className = "legend-zero";
  const zeroSwatch = document.createElement("span");
  zeroSwatch.className = "legend-swatch";
  zeroSwatch.style.background = NEUTRAL_ZERO;
  zero.appendChild(zeroSwatch);
  zero.appendChild(document.createTextNode("0 · nothing reachable"));
  el.appendChild(zero);

  const bar = document.createElement("div");
  bar.className = "legend-bar";
  bar.style.background = rampGradientCss();
  el.appendChild(bar);

  const labels = document.createElement("div");
  labels.className = "legend-labels";
  for (const v of ["0", "0.25", "0.5", "0.75", "1"]) {
    const s = document.createElement("span");
    s.textContent = v;
    labels.appendChild(s);
  }
  el.appendChild(labels);

  const gated = document.createElement("div");
  gated.className = "legend-gated";
  const gatedSwatch = document.createElement("span");
  gatedSwatch.className = "legend-swatch legend-hatch";
  gated.appendChild(gatedSwatch);
  gated.appendChild(document.createTextNode("required amenity absent"));
  gated.style.display = "none";
  el.appendChild(gated);

  return {
    element: el,
    setGatedVisible(visible) {
      gated.style.display = visible ? "flex" : "none";
    },
  };
}
