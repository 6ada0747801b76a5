// Axis-free min-max scaled polyline thumbnails.

export function polylinePoints(values: number[], w = 240, h = 48, margin = 2): string {
  if (values.length < 2) return "";
  const min = Math.min(...values);
  const max = Math.max(...values);
  const range = max - min || 1; // constant series draws a horizontal midline
  return values
    .map((v, i) => {
      const x = (i / (values.length - 1)) * w;
      const y = h - margin - ((v - min) / range) * (h - 2 * margin);
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
}

export function sparklineSvg(values: number[], w = 240, h = 48): string {
  const points = polylinePoints(values, w, h);
  if (!points) return "";
  return (
    `<svg width="${w}" height="${h}" viewBox="0 0 ${w} ${h}" class="sparkline">` +
    `<polyline points="${points}" fill="none" stroke="currentColor" stroke-width="1.2"/></svg>`
  );
}
