/**
 * Point cloud rendering: orbit camera, per-part colors, axis arrows, and a
 * screen-space brush that reports painted point indices.
 */
import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";
import { AnnotationDoc } from "./schema";
import { Vec3, bboxDiagonal, transformAtPhase } from "./kinematics";
import { AnimationState } from "./session";

const PART_COLORS = [
  0x9e9e9e, 0xff8f00, 0x1e88e5, 0x43a047, 0xe53935, 0x8e24aa, 0x6d4c41,
  0xd81b60, 0x00acc1, 0xfdd835,
];

export class Viewer {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  readonly renderer: THREE.WebGLRenderer;
  readonly controls: OrbitControls;
  private geometry: THREE.BufferGeometry | null = null;
  private points: THREE.Points | null = null;
  private axisGroup = new THREE.Group();
  private rest: Float32Array = new Float32Array(0);
  private diagonal = 1;
  onBrush: ((indices: number[]) => void) | null = null;
  brushRadiusPx = 18;
  paintMode = false;

  constructor(private container: HTMLElement) {
    this.camera = new THREE.PerspectiveCamera(
      50,
      container.clientWidth / container.clientHeight,
      0.01,
      100,
    );
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setSize(container.clientWidth, container.clientHeight);
    this.renderer.setClearColor(0x151820);
    container.appendChild(this.renderer.domElement);
    this.controls = new OrbitControls(this.camera, this.renderer.domElement);
    this.scene.add(this.axisGroup);
    this.renderer.domElement.addEventListener("pointerdown", (e) =>
      this.handleBrush(e),
    );
    this.renderer.domElement.addEventListener("pointermove", (e) => {
      if (e.buttons === 1) this.handleBrush(e);
    });
    window.addEventListener("resize", () => this.resize());
    const animate = () => {
      requestAnimationFrame(animate);
      this.controls.update();
      this.renderer.render(this.scene, this.camera);
    };
    animate();
  }

  get diag(): number {
    return this.diagonal;
  }

  loadDocument(doc: AnnotationDoc, labels: Int32Array): void {
    if (this.points) {
      this.scene.remove(this.points);
      this.geometry?.dispose();
    }
    const n = doc.points.length;
    this.rest = new Float32Array(n * 3);
    doc.points.forEach((p, i) => this.rest.set(p, i * 3));
    this.diagonal = bboxDiagonal(this.rest);
    this.geometry = new THREE.BufferGeometry();
    this.geometry.setAttribute(
      "position",
      new THREE.BufferAttribute(this.rest.slice(), 3),
    );
    this.geometry.setAttribute(
      "color",
      new THREE.BufferAttribute(new Float32Array(n * 3), 3),
    );
    const material = new THREE.PointsMaterial({
      size: 0.012 * this.diagonal,
      vertexColors: true,
    });
    this.points = new THREE.Points(this.geometry, material);
    this.scene.add(this.points);
    this.applyLabels(labels);
    this.drawAxes(doc);
    this.frameCamera();
  }

  applyLabels(labels: Int32Array): void {
    if (!this.geometry) return;
    const colors = this.geometry.getAttribute("color") as THREE.BufferAttribute;
    const c = new THREE.Color();
    for (let i = 0; i < labels.length; i++) {
      c.setHex(PART_COLORS[(labels[i] + 1) % PART_COLORS.length]);
      colors.setXYZ(i, c.r, c.g, c.b);
    }
    colors.needsUpdate = true;
  }

  drawAxes(doc: AnnotationDoc): void {
    this.axisGroup.clear();
    doc.parts.forEach((part) => {
      part.motions.forEach((motion) => {
        const dir = new THREE.Vector3(...motion.direction).normalize();
        const origin = new THREE.Vector3(...motion.anchor).addScaledVector(
          dir,
          -0.4 * this.diagonal,
        );
        const arrow = new THREE.ArrowHelper(
          dir,
          origin,
          0.8 * this.diagonal,
          motion.type === "T" ? 0x80dfff : 0xfff176,
          0.05 * this.diagonal,
          0.02 * this.diagonal,
        );
        this.axisGroup.add(arrow);
      });
    });
  }

  /** Show the cloud with one part posed at an animation phase. */
  pose(doc: AnnotationDoc, anim: AnimationState | null): void {
    if (!this.geometry) return;
    const position = this.geometry.getAttribute(
      "position",
    ) as THREE.BufferAttribute;
    const array = position.array as Float32Array;
    array.set(this.rest);
    if (anim) {
      const part = doc.parts[anim.partIndex];
      const motion = part?.motions[anim.motionIndex];
      if (part && motion) {
        for (const idx of part.indices) {
          const p: Vec3 = [
            this.rest[idx * 3],
            this.rest[idx * 3 + 1],
            this.rest[idx * 3 + 2],
          ];
          const moved = transformAtPhase(
            p,
            motion.type,
            motion.anchor,
            motion.direction,
            anim.phase,
            this.diagonal,
          );
          array.set(moved, idx * 3);
        }
      }
    }
    position.needsUpdate = true;
  }

  private frameCamera(): void {
    if (!this.geometry) return;
    this.geometry.computeBoundingSphere();
    const sphere = this.geometry.boundingSphere;
    if (!sphere) return;
    const d = sphere.radius * 2.6;
    this.camera.position
      .copy(sphere.center)
      .add(new THREE.Vector3(d * 0.7, -d * 0.8, d * 0.55));
    this.camera.up.set(0, 0, 1);
    this.controls.target.copy(sphere.center);
    this.camera.lookAt(sphere.center);
  }

  private handleBrush(event: PointerEvent): void {
    if (!this.paintMode || !this.onBrush || !this.geometry) return;
    const rect = this.renderer.domElement.getBoundingClientRect();
    const px = event.clientX - rect.left;
    const py = event.clientY - rect.top;
    const position = this.geometry.getAttribute(
      "position",
    ) as THREE.BufferAttribute;
    const v = new THREE.Vector3();
    const hits: number[] = [];
    for (let i = 0; i < position.count; i++) {
      v.fromBufferAttribute(position, i).project(this.camera);
      const sx = ((v.x + 1) / 2) * rect.width;
      const sy = ((1 - v.y) / 2) * rect.height;
      if (v.z < 1 && Math.hypot(sx - px, sy - py) <= this.brushRadiusPx) {
        hits.push(i);
      }
    }
    if (hits.length) this.onBrush(hits);
  }

  private resize(): void {
    const w = this.container.clientWidth;
    const h = this.container.clientHeight;
    this.camera.aspect = w / h;
    this.camera.updateProjectionMatrix();
    this.renderer.setSize(w, h);
  }
}
