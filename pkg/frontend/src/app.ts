/**
 * Participant newsfeed application.
 *
 * Three-pane layout: navigation on the left, the feed (with a composer on
 * top) in the middle, suggested users on the right. Clicking a username
 * opens that user's profile in the middle pane. A countdown runs from the
 * session's duration; when it reaches zero every interactive control is
 * disabled and a completion notice appears. Server-side expiry (409)
 * triggers the same lockout, so the client can never drift past the
 * server's deadline.
 *
 * Counters are optimistic only for likes (bumped on tap, reconciled from
 * the response, reverted on failure); everything else renders
 * server-confirmed values.
 */

import {
  ApiClient,
  ApiError,
  type FeedComment,
  type FeedPost,
  type Profile,
  type SuggestedUser,
} from "./api.js";
import { avatarSvg } from "./avatar.js";
import { formatTimer, messageTimestamp } from "./format.js";

export interface AppConfig {
  apiBase: string;
  sessionId?: string;
  condition?: { polarization: string; bias: string };
  durationS?: number;
  seed?: number;
  tickMs?: number;
}

type View = { kind: "feed" } | { kind: "profile"; handle: string };

interface AppState {
  sessionId: string | null;
  durationS: number;
  deadlineMs: number;
  remainingS: number;
  expired: boolean;
  ownUsername: string;
  view: View;
  posts: FeedPost[];
  page: number;
  hasMore: boolean;
  latestIteration: number;
  suggested: SuggestedUser[];
  profile: Profile | "notfound" | null;
  banner: string | null;
  liked: Set<number>;
  composerText: string;
  commentDrafts: Map<number, string>;
  commentOpen: Set<number>;
  busy: Set<string>;
  loading: boolean;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

export class App {
  readonly api: ApiClient;
  readonly root: HTMLElement;
  private readonly state: AppState;
  private timer: ReturnType<typeof setInterval> | null = null;
  private readonly tickMs: number;

  constructor(private readonly config: AppConfig) {
    this.api = new ApiClient(config.apiBase);
    this.tickMs = config.tickMs ?? 250;
    this.root = el("div", { class: "polarsim-app" });
    this.state = {
      sessionId: null,
      durationS: 0,
      deadlineMs: 0,
      remainingS: 0,
      expired: false,
      ownUsername: "",
      view: { kind: "feed" },
      posts: [],
      page: 1,
      hasMore: false,
      latestIteration: 1,
      suggested: [],
      profile: null,
      banner: null,
      liked: new Set(),
      composerText: "",
      commentDrafts: new Map(),
      commentOpen: new Set(),
      busy: new Set(),
      loading: false,
    };
  }

  get sessionId(): string | null {
    return this.state.sessionId;
  }

  get expired(): boolean {
    return this.state.expired;
  }

  // -- lifecycle ----------------------------------------------------------

  async start(): Promise<void> {
    if (this.config.sessionId) {
      await this.resumeSession(this.config.sessionId);
      return;
    }
    this.renderStartScreen();
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  async createSession(condition: { polarization: string; bias: string }): Promise<void> {
    const options: { seed?: number; duration_s?: number } = {};
    if (this.config.seed !== undefined) options.seed = this.config.seed;
    if (this.config.durationS !== undefined) options.duration_s = this.config.durationS;
    const created = await this.api.createSession(condition, options);
    await this.bootSession(created.session_id);
  }

  private async resumeSession(sessionId: string): Promise<void> {
    await this.bootSession(sessionId);
  }

  private async bootSession(sessionId: string): Promise<void> {
    const details = await this.api.getSession(sessionId);
    this.state.sessionId = sessionId;
    this.state.durationS = details.duration_s;
    this.state.remainingS = details.remaining_s;
    this.state.deadlineMs = Date.now() + details.remaining_s * 1000;
    this.state.ownUsername = details.participant;
    this.state.expired = details.remaining_s <= 0;
    this.timer = setInterval(() => this.tick(), this.tickMs);
    await Promise.all([this.loadFeed(1), this.loadSuggested()]);
  }

  private tick(): void {
    if (!this.state.sessionId) return;
    const remaining = (this.state.deadlineMs - Date.now()) / 1000;
    const crossed = remaining <= 0 && !this.state.expired;
    this.state.remainingS = remaining;
    if (crossed) {
      this.state.expired = true;
      this.state.banner = "Session complete. Interactions are disabled.";
      this.render();
      return;
    }
    const label = this.root.querySelector("[data-testid=timer]");
    if (label) label.textContent = formatTimer(remaining);
  }

  private markExpired(): void {
    this.state.expired = true;
    this.state.banner = "Session complete. Interactions are disabled.";
  }

  // -- data loading -------------------------------------------------------

  private async loadFeed(page: number): Promise<void> {
    if (!this.state.sessionId) return;
    this.state.loading = true;
    try {
      const feed = await this.api.getFeed(this.state.sessionId, page);
      this.state.posts = page === 1 ? feed.posts : [...this.state.posts, ...feed.posts];
      this.state.page = feed.page;
      this.state.hasMore = feed.has_more;
      for (const post of feed.posts) {
        if (post.created_iteration !== null) {
          this.state.latestIteration = Math.max(
            this.state.latestIteration,
            post.created_iteration,
          );
        }
      }
    } finally {
      this.state.loading = false;
    }
    this.render();
  }

  private async loadSuggested(): Promise<void> {
    if (!this.state.sessionId) return;
    const { users } = await this.api.suggestedUsers(this.state.sessionId);
    this.state.suggested = users;
    this.render();
  }

  async openProfile(handle: string): Promise<void> {
    if (!this.state.sessionId) return;
    this.state.view = { kind: "profile", handle };
    this.state.profile = null;
    this.render();
    try {
      this.state.profile = await this.api.profile(handle, this.state.sessionId);
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        this.state.profile = "notfound";
      } else {
        throw error;
      }
    }
    this.render();
  }

  private openFeed(): void {
    this.state.view = { kind: "feed" };
    this.render();
  }

  // -- interactions (one API call per gesture) -----------------------------

  private async guarded(key: string, action: () => Promise<void>): Promise<void> {
    if (this.state.busy.has(key) || this.state.expired) return;
    this.state.busy.add(key);
    try {
      await action();
    } catch (error) {
      if (error instanceof ApiError && error.sessionExpired) {
        this.markExpired();
      } else if (error instanceof ApiError) {
        this.state.banner = error.message;
      } else {
        throw error;
      }
    } finally {
      this.state.busy.delete(key);
      this.render();
    }
  }

  private submitPost(): Promise<void> {
    const text = this.state.composerText.trim();
    if (!text) return Promise.resolve();
    return this.guarded("composer", async () => {
      await this.api.createPost(this.state.sessionId!, text);
      this.state.composerText = "";
      await this.loadFeed(1); // own posts come back atop page 1
    });
  }

  private likePost(post: FeedPost): Promise<void> {
    return this.guarded(`like:${post.id}`, async () => {
      post.likes += 1; // optimistic, reconciled below
      this.render();
      try {
        const result = await this.api.like(this.state.sessionId!, post.id);
        post.likes = result.likes;
        this.state.liked.add(post.id);
      } catch (error) {
        post.likes -= 1;
        if (error instanceof ApiError && error.code === "duplicate_like") {
          this.state.liked.add(post.id);
          return;
        }
        throw error;
      }
    });
  }

  private submitComment(post: FeedPost): Promise<void> {
    const text = (this.state.commentDrafts.get(post.id) ?? "").trim();
    if (!text) return Promise.resolve();
    return this.guarded(`comment:${post.id}`, async () => {
      const result = await this.api.comment(this.state.sessionId!, post.id, text);
      post.comments = result.comments;
      post.comment_items.push({
        id: -1,
        username: this.state.ownUsername,
        text,
        created_iteration: null,
        created_at: Date.now() / 1000,
        is_own: true,
      });
      this.state.commentDrafts.delete(post.id);
      this.state.commentOpen.delete(post.id);
    });
  }

  private repostPost(post: FeedPost): Promise<void> {
    return this.guarded(`repost:${post.id}`, async () => {
      const result = await this.api.repost(this.state.sessionId!, post.id);
      post.reposts = result.reposts;
    });
  }

  private followUser(username: string, agentId: number): Promise<void> {
    return this.guarded(`follow:${agentId}`, async () => {
      await this.api.follow(this.state.sessionId!, agentId);
      this.state.suggested = this.state.suggested.filter(
        (user) => user.agent_id !== agentId,
      );
      if (
        this.state.profile &&
        this.state.profile !== "notfound" &&
        this.state.profile.username === username
      ) {
        this.state.profile = await this.api.profile(username, this.state.sessionId!);
      }
    });
  }

  private unfollowUser(username: string, agentId: number): Promise<void> {
    return this.guarded(`follow:${agentId}`, async () => {
      await this.api.unfollow(this.state.sessionId!, agentId);
      if (
        this.state.profile &&
        this.state.profile !== "notfound" &&
        this.state.profile.username === username
      ) {
        this.state.profile = await this.api.profile(username, this.state.sessionId!);
      }
      await this.loadSuggested();
    });
  }

  // -- rendering ----------------------------------------------------------

  private renderStartScreen(): void {
    const polarization = el("select", { "data-testid": "pick-polarization" });
    polarization.append(el("option", { value: "polarized" }, "polarized"));
    polarization.append(el("option", { value: "moderate" }, "moderate"));
    const bias = el("select", { "data-testid": "pick-bias" });
    for (const value of ["pro", "balanced", "contra"]) {
      bias.append(el("option", { value }, value));
    }
    if (this.config.condition) {
      polarization.value = this.config.condition.polarization;
      bias.value = this.config.condition.bias;
    }
    const button = el("button", { "data-testid": "start-session" }, "Start session");
    button.addEventListener("click", () => {
      void this.createSession({ polarization: polarization.value, bias: bias.value });
    });
    this.root.replaceChildren(
      el(
        "div",
        { class: "start-screen" },
        el("h1", {}, "Newsfeed study"),
        el("p", {}, "Pick the condition and start your session."),
        polarization,
        bias,
        button,
      ),
    );
  }

  render(): void {
    if (!this.state.sessionId) return;
    const center =
      this.state.view.kind === "feed" ? this.renderFeed() : this.renderProfile();
    this.root.replaceChildren(
      this.state.banner
        ? el("div", { class: "banner", "data-testid": "banner" }, this.state.banner)
        : "",
      el(
        "div",
        { class: "layout" },
        this.renderNav(),
        el("main", { class: "center" }, center),
        this.renderSuggested(),
      ),
    );
  }

  private renderNav(): HTMLElement {
    const home = el("button", { "data-testid": "nav-home" }, "Home");
    home.addEventListener("click", () => this.openFeed());
    const me = el("button", { "data-testid": "nav-profile" }, "My profile");
    me.addEventListener("click", () => void this.openProfile(this.state.ownUsername));
    return el(
      "nav",
      { class: "sidebar" },
      el("div", { class: "timer", "data-testid": "timer" }, formatTimer(this.state.remainingS)),
      home,
      me,
    );
  }

  private avatarNode(username: string): HTMLElement {
    const span = el("span", { class: "avatar" });
    span.innerHTML = avatarSvg(username);
    return span;
  }

  private usernameLink(username: string): HTMLElement {
    const link = el("a", { href: "#", class: "username" }, `@${username}`);
    link.addEventListener("click", (event) => {
      event.preventDefault();
      void this.openProfile(username);
    });
    return link;
  }

  private renderComposer(): HTMLElement {
    const input = el("textarea", {
      class: "composer-input",
      "data-testid": "composer-input",
      placeholder: "Share your thoughts...",
    }) as HTMLTextAreaElement;
    input.value = this.state.composerText;
    input.addEventListener("input", () => {
      this.state.composerText = input.value;
    });
    const button = el(
      "button",
      { "data-testid": "composer-submit" },
      "Post",
    ) as HTMLButtonElement;
    button.disabled = this.state.expired;
    input.disabled = this.state.expired;
    button.addEventListener("click", () => void this.submitPost());
    return el("div", { class: "composer" }, input, button);
  }

  private renderComment(comment: FeedComment): HTMLElement {
    return el(
      "div",
      { class: "comment" },
      this.avatarNode(comment.username),
      this.usernameLink(comment.username),
      el("span", { class: "text" }, comment.text),
    );
  }

  private renderPost(post: FeedPost): HTMLElement {
    const now = Date.now() / 1000;
    const like = el(
      "button",
      { class: "action like", "data-testid": `like-${post.id}` },
      `♥ ${post.likes}`,
    ) as HTMLButtonElement;
    like.disabled = this.state.expired || this.state.liked.has(post.id);
    like.addEventListener("click", () => void this.likePost(post));

    const commentToggle = el(
      "button",
      { class: "action comment", "data-testid": `comment-${post.id}` },
      `💬 ${post.comments}`,
    ) as HTMLButtonElement;
    commentToggle.disabled = this.state.expired;
    commentToggle.addEventListener("click", () => {
      if (this.state.commentOpen.has(post.id)) {
        this.state.commentOpen.delete(post.id);
      } else {
        this.state.commentOpen.add(post.id);
      }
      this.render();
    });

    const repost = el(
      "button",
      { class: "action repost", "data-testid": `repost-${post.id}` },
      `🔁 ${post.reposts}`,
    ) as HTMLButtonElement;
    repost.disabled = this.state.expired;
    repost.addEventListener("click", () => void this.repostPost(post));

    const children: (Node | string)[] = [
      el(
        "header",
        {},
        this.avatarNode(post.username),
        this.usernameLink(post.username),
        el(
          "span",
          { class: "time" },
          messageTimestamp(post, this.state.latestIteration, now),
        ),
        post.is_own ? el("span", { class: "own-tag" }, "you") : "",
      ),
      el("p", { class: "text" }, post.text),
      el("div", { class: "actions" }, like, commentToggle, repost),
    ];
    if (post.comment_items.length > 0) {
      children.push(
        el(
          "div",
          { class: "comments" },
          ...post.comment_items.map((c) => this.renderComment(c)),
        ),
      );
    }
    if (this.state.commentOpen.has(post.id) && !this.state.expired) {
      const draft = el("textarea", {
        class: "comment-input",
        "data-testid": `comment-input-${post.id}`,
      }) as HTMLTextAreaElement;
      draft.value = this.state.commentDrafts.get(post.id) ?? "";
      draft.addEventListener("input", () => {
        this.state.commentDrafts.set(post.id, draft.value);
      });
      const send = el(
        "button",
        { "data-testid": `comment-submit-${post.id}` },
        "Reply",
      ) as HTMLButtonElement;
      send.addEventListener("click", () => void this.submitComment(post));
      children.push(el("div", { class: "comment-compose" }, draft, send));
    }
    return el("article", { class: "post", "data-testid": `post-${post.id}` }, ...children);
  }

  private renderFeed(): HTMLElement {
    const posts = this.state.posts.map((p) => this.renderPost(p));
    const more = el(
      "button",
      { class: "load-more", "data-testid": "load-more" },
      this.state.loading ? "Loading..." : "Load more",
    ) as HTMLButtonElement;
    more.disabled = !this.state.hasMore || this.state.loading;
    more.addEventListener("click", () => void this.loadFeed(this.state.page + 1));
    return el(
      "div",
      { class: "feed", "data-testid": "feed" },
      this.renderComposer(),
      ...posts,
      more,
    );
  }

  private renderProfile(): HTMLElement {
    const profile = this.state.profile;
    if (profile === null) {
      return el("div", { class: "profile" }, "Loading profile...");
    }
    if (profile === "notfound") {
      return el(
        "div",
        { class: "profile", "data-testid": "profile-notfound" },
        "No such user.",
      );
    }
    const children: (Node | string)[] = [
      this.avatarNode(profile.username),
      el("h2", {}, `@${profile.username}`),
      el("p", { class: "bio" }, profile.biography),
      el(
        "p",
        { class: "counts", "data-testid": "profile-counts" },
        `${profile.followers} followers · ${profile.followees} following`,
      ),
    ];
    if (!profile.is_self) {
      const label = profile.is_followed ? "Unfollow" : "Follow";
      const button = el(
        "button",
        { "data-testid": "profile-follow" },
        label,
      ) as HTMLButtonElement;
      button.disabled = this.state.expired;
      button.addEventListener("click", () => {
        if (profile.is_followed) {
          void this.unfollowUser(profile.username, profile.agent_id);
        } else {
          void this.followUser(profile.username, profile.agent_id);
        }
      });
      children.push(button);
    }
    children.push(
      el(
        "div",
        { class: "profile-posts" },
        ...profile.posts.map((p) => this.renderPost(p)),
      ),
    );
    return el("div", { class: "profile", "data-testid": "profile" }, ...children);
  }

  private renderSuggested(): HTMLElement {
    const rows = this.state.suggested.map((user) => {
      const follow = el(
        "button",
        { "data-testid": `suggest-follow-${user.username}` },
        "Follow",
      ) as HTMLButtonElement;
      follow.disabled = this.state.expired;
      follow.addEventListener("click", () =>
        void this.followUser(user.username, user.agent_id),
      );
      return el(
        "div",
        { class: "suggested-user" },
        this.avatarNode(user.username),
        this.usernameLink(user.username),
        el("span", { class: "followers" }, `${user.followers} followers`),
        follow,
      );
    });
    return el(
      "aside",
      { class: "suggested", "data-testid": "suggested" },
      el("h3", {}, "Who to follow"),
      ...rows,
    );
  }
}

export function createApp(config: AppConfig): App {
  return new App(config);
}
