export interface BannerController {
  element: HTMLElement;
  show: (message: string) => void;
  hide: () => void;
}

export function createBanner(): BannerController {
  const el = document.createElement("div");
  el.className = "banner";
  el.style.display = "none";
  const text = document.createElement("span");
  el.appendChild(text);
  const close = document.createElement("button");
  close.type = "button";
  close.textContent = "×";
  close.setAttribute("aria-label", "Dismiss");
  close.addEventListener("click", () => {
    el.style.display = "none";
  });
  el.appendChild(close);
  return {
    element: el,
    show(message) {
      text.textContent = message;
      el.style.display = "flex";
    },
    hide() {
      el.style.display = "none";
    },
  };
}
