import { ConsoleApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("gateway") ?? "http://127.0.0.1:8400";

const app = new ConsoleApp(baseUrl, document);
app.start();

const label = document.querySelector("#gateway-url");
if (label) {
  label.textContent = baseUrl;
}
