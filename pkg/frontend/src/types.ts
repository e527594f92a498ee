/** API document shapes, mirroring the orchestrator's HTTP responses. */

export interface EncryptionConstraint {
  required: boolean;
  compliance?: string;
  layerPreference?: string[];
}

export interface IntentRequest {
  src: string;
  dst: string;
  bandwidthMbps: number;
  maxLatencyMs?: number;
  encryption: EncryptionConstraint;
}

export interface StateChange {
  state: string;
  sequence: number;
  reason: string;
}

export interface IntentView {
  id: string;
  action: string;
  src: string;
  dst: string;
  bandwidthMbps: number;
  maxLatencyMs?: number;
  encryption: EncryptionConstraint;
  state: string;
  stateHistory: StateChange[];
}

export interface NodeView {
  id: string;
  kind: string;
  layer: string;
  siteId?: string;
  capabilities?: { layer: string; mechanism: string; keyLengthBits: number }[];
}

export interface LinkView {
  id: string;
  aNode: string;
  bNode: string;
  kind: string;
  state: string;
  capacityMbps: number;
  latencyMs: number;
  wavelengthCount?: number;
  lambdaOccupancy?: Record<string, string>;
}

export interface TopologySnapshot {
  revision: number;
  nodes: NodeView[];
  links: LinkView[];
  sites: Record<string, string[]>;
  defaults: { wavelengthCount: number; lineRateMbps: number };
}

export interface SolutionView {
  layer: string;
  mechanism: string | null;
  opticalPath: string[];
  wavelengthIndex: number;
  overlayPath: string[];
  totalLatencyMs: number;
  groomedLightpath: string | null;
}

export interface ServiceView {
  intentId: string;
  solution: SolutionView;
  lightpathId: string;
  installedAtRevision: number;
}

export interface ExplainCandidate {
  layer: string;
  mechanism: string | null;
  path: string[];
  lambda: number | null;
  groomed: boolean;
  feasible: boolean;
  reason: string;
}

export interface ExplainReport {
  candidates: ExplainCandidate[];
  notice: string | null;
}

export interface EventOutcome {
  revision: number;
  results: { intentId: string; state: string }[];
}

export interface ApiError {
  error: string;
  detail: string;
  reasons?: string[];
}
