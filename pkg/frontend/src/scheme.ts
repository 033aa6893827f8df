/** The labeling scheme shown next to every sentence.
 *
 * Mirrors the category definitions the classifier prompt uses, so human
 * annotators and the model apply the same rules.
 */

import { LabelValue } from "./api.js";

export interface Category {
  value: LabelValue;
  title: string;
  points: string[];
}

export const SCHEME_INTRO =
  "Classify what the sentence asserts or implies, based on evidence " +
  "(studies, research, reports, findings, analysis, literature or data), " +
  "about the health and other impacts of e-cigarettes. E-cigarettes include " +
  "e-cig, electronic cigarette, e-pen, EC, ENDS, vape and vaporizer; they do " +
  "not include tobacco cigarettes or heat-not-burn products.";

export const CATEGORIES: readonly Category[] = [
  {
    value: "helpful",
    title: "Helpful",
    points: [
      "E-cigarettes are better compared to tobacco smoking or cigarettes.",
      "E-cigarettes reduce tobacco smoking or cigarette use.",
      "E-cigarettes help people quit smoking.",
    ],
  },
  {
    value: "harmful",
    title: "Harmful",
    points: [
      "E-cigarettes cause disease, illness, side-effects, addiction, fire, nicotine exposure or environmental harm.",
      "E-cigarettes do not help people quit or reduce smoking.",
      "E-cigarettes have the same negative effects as smoking.",
      "E-cigarettes cause people to start smoking (the gateway effect).",
      "E-cigarettes are used by never smokers.",
      "E-cigarettes are used by children and adolescents (unless those young people were existing smokers).",
    ],
  },
  {
    value: "neither",
    title: "Neither",
    points: [
      "Both a helpful and a harmful implication are present.",
      "The sentence is about reasons for use, perception, or popularity/usage rates (except by young people and never-smokers).",
      "The sentence only says the evidence is unclear, incomplete or inconclusive, or that more evidence is needed or was requested.",
    ],
  },
];
