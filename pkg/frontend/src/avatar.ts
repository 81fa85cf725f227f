/**
 * Deterministic avatar placeholders keyed by username: a stable string
 * hash picks the background hue, the initials come from the handle.
 * The same username always renders the same avatar.
 */

export function hashString(value: string): number {
  // FNV-1a, 32-bit
  let hash = 0x811c9dc5;
  for (let i = 0; i < value.length; i++) {
    hash ^= value.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

export function avatarColor(username: string): string {
  const hue = hashString(username) % 360;
  return `hsl(${hue}, 55%, 45%)`;
}

export function avatarInitials(username: string): string {
  const parts = username.split(/[_\-.\s]+/).filter(Boolean);
  if (parts.length === 0) return "?";
  if (parts.length === 1) return parts[0].slice(0, 2).toUpperCase();
  return (parts[0][0] + parts[1][0]).toUpperCase();
}

export function avatarSvg(username: string, size = 40): string {
  const color = avatarColor(username);
  const initials = avatarInitials(username);
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${size}" height="${size}" ` +
    `viewBox="0 0 40 40" role="img" aria-label="${username}">` +
    `<circle cx="20" cy="20" r="20" fill="${color}"/>` +
    `<text x="20" y="25" text-anchor="middle" font-family="sans-serif" ` +
    `font-size="14" fill="#fff">${initials}</text></svg>`
  );
}
