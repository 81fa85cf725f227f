/**
 * Typed client for the feed-service REST API.
 *
 * Every UI gesture maps to exactly one method call here, and every method
 * issues exactly one HTTP request. Errors arrive as `{code, message}`
 * bodies with 4xx statuses and surface as ApiError.
 */

export interface SessionInfo {
  session_id: string;
  duration_s: number;
}

export interface SessionDetails {
  session_id: string;
  condition: { polarization: string; bias: string };
  duration_s: number;
  remaining_s: number;
  participant: string;
}

export interface FeedComment {
  id: number;
  username: string;
  text: string;
  created_iteration: number | null;
  created_at: number | null;
  is_own: boolean;
}

export interface FeedPost extends FeedComment {
  kind: string;
  likes: number;
  comments: number;
  reposts: number;
  comment_items: FeedComment[];
}

export interface FeedPage {
  posts: FeedPost[];
  page: number;
  has_more: boolean;
}

export interface SuggestedUser {
  agent_id: number;
  username: string;
  biography: string;
  followers: number;
}

export interface Profile {
  agent_id: number;
  username: string;
  biography: string;
  followers: number;
  followees: number;
  posts: FeedPost[];
  is_followed: boolean | null;
  is_self: boolean;
}

export interface SessionEvent {
  seq: number;
  actor: number;
  action: string;
  target: number | null;
  payload: string | null;
  timestamp: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }

  get sessionExpired(): boolean {
    return this.code === "session_expired";
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let code = "http_error";
  let message = `${response.status}`;
  try {
    const body = (await response.json()) as { code?: string; message?: string };
    code = body.code ?? code;
    message = body.message ?? message;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, code, message);
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  createSession(
    condition: { polarization: string; bias: string },
    options: { seed?: number; duration_s?: number } = {},
  ): Promise<SessionInfo> {
    return this.request("/sessions", {
      method: "POST",
      body: JSON.stringify({ condition, ...options }),
    });
  }

  getSession(sessionId: string): Promise<SessionDetails> {
    return this.request(`/sessions/${sessionId}`);
  }

  getFeed(sessionId: string, page = 1): Promise<FeedPage> {
    return this.request(`/sessions/${sessionId}/feed?page=${page}`);
  }

  createPost(sessionId: string, text: string): Promise<{ message_id: number }> {
    return this.request(`/sessions/${sessionId}/posts`, {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  }

  like(sessionId: string, messageId: number): Promise<{ likes: number }> {
    return this.request(`/sessions/${sessionId}/messages/${messageId}/likes`, {
      method: "POST",
    });
  }

  comment(
    sessionId: string,
    messageId: number,
    text: string,
  ): Promise<{ comments: number }> {
    return this.request(`/sessions/${sessionId}/messages/${messageId}/comments`, {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  }

  repost(sessionId: string, messageId: number): Promise<{ reposts: number }> {
    return this.request(`/sessions/${sessionId}/messages/${messageId}/reposts`, {
      method: "POST",
    });
  }

  follow(sessionId: string, agentId: number): Promise<{ following: boolean }> {
    return this.request(`/sessions/${sessionId}/follows`, {
      method: "POST",
      body: JSON.stringify({ agent_id: agentId }),
    });
  }

  unfollow(sessionId: string, agentId: number): Promise<{ following: boolean }> {
    return this.request(`/sessions/${sessionId}/follows/${agentId}`, {
      method: "DELETE",
    });
  }

  suggestedUsers(sessionId: string): Promise<{ users: SuggestedUser[] }> {
    return this.request(`/sessions/${sessionId}/suggested-users`);
  }

  profile(handle: string, sessionId: string): Promise<Profile> {
    return this.request(
      `/users/${encodeURIComponent(handle)}?session_id=${sessionId}`,
    );
  }

  events(sessionId: string): Promise<{ events: SessionEvent[] }> {
    return this.request(`/sessions/${sessionId}/events`);
  }
}
