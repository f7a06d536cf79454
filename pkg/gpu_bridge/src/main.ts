#!/usr/bin/env node
/**
 * Bridge entry point.
 *
 *   gpudissect-bridge                       # real device (needs a driver)
 *   gpudissect-bridge --virtual profile.json  # deterministic virtual device
 */

import { CudaDevice } from "./cuda.js";
import { serve } from "./serve.js";
import { VirtualDevice, loadProfile } from "./virtual.js";

function main(argv: string[]): void {
  let executor;
  const virtualIdx = argv.indexOf("--virtual");
  if (virtualIdx >= 0) {
    const profilePath = argv[virtualIdx + 1];
    if (!profilePath) {
      process.stderr.write("--virtual needs a profile path\n");
      process.exit(2);
    }
    executor = new VirtualDevice(loadProfile(profilePath));
  } else {
    executor = new CudaDevice();
  }
  serve(executor).then(() => process.exit(0));
}

import { fileURLToPath } from "node:url";

if (process.argv[1] && process.argv[1] === fileURLToPath(import.meta.url)) {
  main(process.argv.slice(2));
}
