export async function waitFor(
  predicate: () => boolean,
  timeoutMs = 10_000,
  intervalMs = 25,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (predicate()) return;
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
  throw new Error("condition not met within timeout");
}

export function click(root: ParentNode, testId: string): void {
  const node = root.querySelector<HTMLButtonElement>(`[data-testid="${testId}"]`);
  if (!node) throw new Error(`no element with data-testid=${testId}`);
  if (node.disabled) throw new Error(`${testId} is disabled`);
  node.click();
}

export function type(root: ParentNode, testId: string, text: string): void {
  const node = root.querySelector<HTMLTextAreaElement>(`[data-testid="${testId}"]`);
  if (!node) throw new Error(`no element with data-testid=${testId}`);
  node.value = text;
  node.dispatchEvent(new Event("input", { bubbles: true }));
}

export function text(root: ParentNode, testId: string): string {
  const node = root.querySelector(`[data-testid="${testId}"]`);
  if (!node) throw new Error(`no element with data-testid=${testId}`);
  return node.textContent ?? "";
}
