/** Thin HTTP client for the emulator's monitoring endpoints. Every
 * request goes through one choke point that records method and URL, so
 * tests can assert the console never issues anything but GETs. */

export interface FetchResponse {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
  text(): Promise<string>;
}

export type FetchFn = (url: string) => Promise<FetchResponse>;

export interface LookingGlassResult {
  ok: boolean;
  status: number;
  text: string;
}

export class ApiClient {
  readonly log: { method: "GET"; url: string }[] = [];

  constructor(
    private baseUrl = "",
    private fetchFn: FetchFn = (url) => fetch(url),
  ) {}

  private get(path: string): Promise<FetchResponse> {
    const url = `${this.baseUrl}${path}`;
    this.log.push({ method: "GET", url });
    return this.fetchFn(url);
  }

  async matrix(): Promise<unknown> {
    const res = await this.get("/matrix");
    if (!res.ok) throw new Error(`/matrix returned ${res.status}`);
    return res.json();
  }

  async diagnosis(): Promise<unknown> {
    const res = await this.get("/matrix/diagnosis");
    if (!res.ok) throw new Error(`/matrix/diagnosis returned ${res.status}`);
    return res.json();
  }

  async path(src: number, dst: number): Promise<unknown> {
    const res = await this.get(`/path?src=${src}&dst=${dst}`);
    if (!res.ok) throw new Error(`/path returned ${res.status}`);
    return res.json();
  }

  async lookingGlass(
    asn: number,
    device: string,
    view: string,
  ): Promise<LookingGlassResult> {
    const res = await this.get(
      `/lg/${asn}/${encodeURIComponent(device)}/${encodeURIComponent(view)}`,
    );
    return { ok: res.ok, status: res.status, text: await res.text() };
  }
}
