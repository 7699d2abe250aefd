import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

export const SAMPLE_CSV = [
  "axis,value,algorithm,metric,mean,stderr,trials",
  "M,20,tsoamp,aer,0.09,0.004,200",
  "M,20,tsoamp,nmse_db,-1.8,0.05,200",
  "M,40,tsoamp,aer,0.012,0.001,200",
  "M,40,tsoamp,nmse_db,-5.2,0.06,200",
  "M,20,swomp,aer,0.2,0.006,200",
  "M,20,swomp,nmse_db,-0.7,0.04,200",
  "M,40,swomp,aer,0.08,0.003,200",
  "M,40,swomp,nmse_db,-2.1,0.05,200",
].join("\n") + "\n";

export function makeTmpDir(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), "plots-test-"));
}

export function writeTmpCsv(dir: string, name: string, text: string): string {
  const p = path.join(dir, name);
  fs.writeFileSync(p, text, "utf8");
  return p;
}
