// Parameter form models generated from skill descriptions. Element params
// become dropdowns over the live instances of their concept; fundamentals
// map to the matching input type.

import type { ParamRecord, SkillRecord } from './api.js';

export interface FieldModel {
  key: string;
  flavor: string;
  kind: 'element' | 'float' | 'int' | 'bool' | 'string' | 'list' | 'map';
  concept?: string;
  options: string[];
  value: string;
  placeholder: string;
}

function kindOf(param: ParamRecord): FieldModel['kind'] {
  if (param.element) {
    return 'element';
  }
  return (param.type ?? 'string') as FieldModel['kind'];
}

export function buildForm(
  skill: SkillRecord,
  instancesByConcept: (concept: string) => string[],
): FieldModel[] {
  return skill.params.map((param) => {
    const kind = kindOf(param);
    const options = kind === 'element' ? instancesByConcept(param.element!) : [];
    let placeholder: string = param.flavor;
    if (param.flavor === 'inferred') {
      placeholder = 'inferred from world model';
    } else if (param.default !== undefined) {
      placeholder = `default: ${JSON.stringify(param.default)}`;
    }
    return {
      key: param.key,
      flavor: param.flavor,
      kind,
      concept: param.element,
      options,
      value: '',
      placeholder,
    };
  });
}

/** Parse user input back to wire values; blank optional/inferred fields are omitted. */
export function collectParams(fields: FieldModel[]): Record<string, unknown> {
  const params: Record<string, unknown> = {};
  for (const field of fields) {
    const raw = field.value.trim();
    if (!raw) {
      continue;
    }
    switch (field.kind) {
      case 'element':
      case 'string':
        params[field.key] = raw;
        break;
      case 'float':
        params[field.key] = Number(raw);
        break;
      case 'int':
        params[field.key] = parseInt(raw, 10);
        break;
      case 'bool':
        params[field.key] = raw.toLowerCase() === 'true';
        break;
      case 'list':
      case 'map':
        params[field.key] = JSON.parse(raw);
        break;
    }
  }
  return params;
}

export function missingRequired(fields: FieldModel[]): string[] {
  return fields
    .filter((f) => f.flavor === 'required' && !f.value.trim())
    .map((f) => f.key);
}
