// Browser entry point. The service origin comes from ?api=... and defaults
// to the review-serve default port on the same host.

import { boot } from './app.js';

const params = new URLSearchParams(window.location.search);
const baseUrl =
  params.get('api') ?? `${window.location.protocol}//${window.location.hostname}:8600`;

const root = document.getElementById('app');
if (root) {
  boot(root, { baseUrl });
}
