import init, { time_trace, deff_curve, normal_modes } from './pkg/spinbath_web.js';

const form = document.getElementById('params');
const status = document.getElementById('status');

function say(text, isError = false) {
  status.textContent = text;
  status.className = isError ? 'error' : '';
}

// Axes, a polyline per series and optional horizontal reference lines.
function plot(canvas, xs, series, { xlabel, ylabel, ylim, hlines = [] }) {
  const ctx = canvas.getContext('2d');
  const W = canvas.width, H = canvas.height, m = { l: 52, r: 12, t: 10, b: 34 };
  ctx.clearRect(0, 0, W, H);
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  const all = series.flatMap(s => s.y).concat(hlines.map(h => h.y));
  const [y0, y1] = ylim ?? [Math.min(...all), Math.max(...all)];
  const pad = (y1 - y0 || 1) * 0.05;
  const ylo = y0 - pad, yhi = y1 + pad;
  const X = x => m.l + (x - x0) / (x1 - x0 || 1) * (W - m.l - m.r);
  const Y = y => H - m.b - (y - ylo) / (yhi - ylo) * (H - m.t - m.b);

  ctx.strokeStyle = '#888'; ctx.fillStyle = '#444'; ctx.font = '11px sans-serif';
  ctx.strokeRect(m.l, m.t, W - m.l - m.r, H - m.t - m.b);
  for (let k = 0; k <= 4; k++) {
    const xv = x0 + (x1 - x0) * k / 4, yv = ylo + (yhi - ylo) * k / 4;
    ctx.fillText(xv.toPrecision(3), X(xv) - 12, H - m.b + 14);
    ctx.fillText(yv.toPrecision(3), 4, Y(yv) + 4);
  }
  ctx.fillText(xlabel, W / 2 - 20, H - 4);
  ctx.save(); ctx.translate(12, H / 2 + 20); ctx.rotate(-Math.PI / 2); ctx.fillText(ylabel, 0, 0); ctx.restore();

  for (const h of hlines) {
    ctx.strokeStyle = h.color; ctx.setLineDash([5, 4]);
    ctx.beginPath(); ctx.moveTo(m.l, Y(h.y)); ctx.lineTo(W - m.r, Y(h.y)); ctx.stroke();
  }
  ctx.setLineDash([]);
  for (const s of series) {
    ctx.strokeStyle = s.color; ctx.lineWidth = 1.5; ctx.beginPath();
    s.y.forEach((y, i) => (i ? ctx.lineTo(X(xs[i]), Y(y)) : ctx.moveTo(X(xs[i]), Y(y))));
    ctx.stroke();
    if (s.dots) {
      ctx.fillStyle = s.color;
      s.y.forEach((y, i) => { ctx.beginPath(); ctx.arc(X(xs[i]), Y(y), 2.5, 0, 7); ctx.fill(); });
    }
  }
}

function drawModes(canvas, modes) {
  const ctx = canvas.getContext('2d');
  const W = canvas.width, H = canvas.height;
  ctx.clearRect(0, 0, W, H);
  const n = modes.vectors.length;
  const cell = W / n, mid = H / 2 - 8, amp = H / 2 - 30;
  ctx.font = '11px sans-serif';
  modes.vectors.forEach((v, j) => {
    const left = j * cell, bw = Math.min(28, (cell - 20) / v.length);
    ctx.fillStyle = '#444';
    ctx.fillText(`mode ${j + 1}: ${modes.freqs_mhz[j].toFixed(3)} MHz`, left + 6, H - 6);
    ctx.strokeStyle = '#bbb'; ctx.beginPath(); ctx.moveTo(left + 6, mid); ctx.lineTo(left + cell - 6, mid); ctx.stroke();
    v.forEach((b, i) => {
      ctx.fillStyle = i === 0 ? '#c0392b' : '#2c6fbb';
      const x = left + 10 + i * (bw + 4);
      ctx.fillRect(x, Math.min(mid, mid - b * amp), bw, Math.abs(b * amp));
    });
  });
}

function params() {
  const f = new FormData(form);
  const num = k => Number(f.get(k));
  return {
    n: num('n'), nc: num('nc'), w1: num('w1'), rabi: num('rabi'), wz: num('wz'), eta: num('eta'),
    nbar: new Float64Array(String(f.get('nbar')).split(/[ ,]+/).filter(Boolean).map(Number)),
    tmax: num('tmax'), wzmax: num('wzmax'), count: num('count'),
  };
}

function run() {
  const p = params();
  say('computing...');
  // Let the status text paint before the blocking computation.
  setTimeout(() => {
    try {
      const t0 = performance.now();
      const tr = JSON.parse(time_trace(p.n, p.nc, p.w1, p.rabi, p.wz, p.eta, p.nbar, p.tmax, 600));
      plot(document.getElementById('trace'), tr.t_over_tau,
        [{ y: tr.sigma_z, color: '#2c6fbb' }],
        { xlabel: 't / tau_S', ylabel: '<sz>', ylim: [-1, 1], hlines: [{ y: tr.mu_infty, color: '#c0392b' }] });

      const c = JSON.parse(deff_curve(p.n, p.nc, p.w1, p.rabi, p.eta, p.nbar, p.wzmax, p.count));
      plot(document.getElementById('deff'), c.omega_z_mhz,
        [{ y: c.d_eff, color: '#27ae60', dots: true }],
        { xlabel: 'omega_z / 2pi (MHz)', ylabel: 'D_eff' });

      const m = JSON.parse(normal_modes(p.n, p.w1, p.eta));
      drawModes(document.getElementById('modes'), m);
      document.getElementById('modetable').textContent = m.freqs_mhz
        .map((f, j) => `mode ${j + 1}  ${f.toFixed(4)} MHz  ratio ${m.ratios[j].toFixed(4)}  eta ${m.etas[j].toFixed(4)}`)
        .join('\n');

      say(`dim ${tr.dim}, D_eff ${tr.d_eff.toFixed(3)}, mu_infty ${tr.mu_infty.toFixed(4)}  (${((performance.now() - t0) / 1000).toFixed(2)} s)`);
    } catch (e) {
      say(e.message ?? String(e), true);
    }
  }, 10);
}

form.addEventListener('submit', e => { e.preventDefault(); run(); });
await init();
run();
